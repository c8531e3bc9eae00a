#ifndef ASTRAS_ASTRAS_HPP
#define ASTRAS_ASTRAS_HPP

#include "astras/angles.hpp"
#include "astras/bench.hpp"
#include "astras/classify/classifier.hpp"
#include "astras/confusion.hpp"
#include "astras/errors.hpp"
#include "astras/features.hpp"
#include "astras/io/binary.hpp"
#include "astras/io/config_json.hpp"
#include "astras/io/dataset_io.hpp"
#include "astras/io/model_io.hpp"
#include "astras/labeling.hpp"
#include "astras/pipeline.hpp"
#include "astras/regress/regressor.hpp"
#include "astras/sector.hpp"
#include "astras/shift.hpp"
#include "astras/simkit.hpp"
#include "astras/types.hpp"

#endif // ASTRAS_ASTRAS_HPP
