#include "astras/astras.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace astras;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitThreshold = 1;
constexpr int kExitError = 2;

json load_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    io::atomic_write(path, text);
}

std::string dashed(std::string s)
{
    for (char& c : s)
        if (c == '_')
            c = '-';
    return s;
}

/// Flag values are JSON literals ("30", "true", "[0, 45]"); anything else is a string.
json parse_flag_value(const std::string& v)
{
    try {
        return json::parse(v);
    } catch (const json::exception&) {
        return json(v);
    }
}

// ---------------------------------------------------------------- simulator config

/// Flat simulator configuration: every field of the geometry, imperfection
/// and schedule structs, settable from a JSON file and from --field flags.
struct SimConfig {
    json geometry = EncoderGeometry{};
    json imperfections = ImperfectionConfig{};
    json schedule = Schedule{};
    std::map<std::string, std::string> flags;

    void add_flags(CLI::App* app)
    {
        for (auto* section : {&geometry, &imperfections, &schedule})
            for (const auto& [key, value] : section->items())
                app->add_option("--" + dashed(key), flags[key], "default " + value.dump())
                    ->type_name("JSON")
                    ->group("Simulator");
    }

    json* section_of(const std::string& key)
    {
        for (auto* section : {&geometry, &imperfections, &schedule})
            if (section->contains(key))
                return section;
        return nullptr;
    }

    void apply_file(const std::string& path)
    {
        const json j = load_json_file(path);
        if (!j.is_object())
            throw ConfigError(path + ": expected a flat JSON object");
        for (const auto& [key, value] : j.items()) {
            json* s = section_of(key);
            if (!s)
                throw ConfigError(path + ": unknown key '" + key + "'");
            (*s)[key] = value;
        }
    }

    void apply_flags()
    {
        for (const auto& [key, value] : flags)
            if (!value.empty())
                (*section_of(key))[key] = parse_flag_value(value);
    }

    EncoderGeometry geo() const { return parse_config<EncoderGeometry>(geometry, "geometry"); }
    ImperfectionConfig imp() const { return parse_config<ImperfectionConfig>(imperfections, "imperfections"); }
    Schedule sched() const { return parse_config<Schedule>(schedule, "schedule"); }
};

// ---------------------------------------------------------------- shared dataset / split handling

struct DataArgs {
    std::string dir;
    std::string labels = "manifest";
    double holdout = 0.25;
    std::uint64_t split_seed = 0;
    bool train_all = false;

    void add(CLI::App* app, bool split = true)
    {
        app->add_option("--data", dir, "dataset directory")->required();
        app->add_option("--labels", labels, "sector labels: manifest (from the label step) or truth (simulator)")
            ->check(CLI::IsMember({"manifest", "truth"}));
        if (split) {
            app->add_option("--holdout", holdout, "held-out fraction for evaluation");
            app->add_option("--split-seed", split_seed, "seed of the train/test split");
            app->add_flag("--train-all", train_all, "train on every sample (evaluation is then on training data)");
        }
    }

    json split_json() const { return {{"holdout_fraction", holdout}, {"seed", split_seed}, {"train_all", train_all}}; }
};

std::vector<int> labels_of(const Dataset& ds, const std::string& source)
{
    if (source == "truth") {
        std::vector<int> y;
        for (const auto& s : ds.samples)
            y.push_back(s.true_sector);
        return y;
    }
    return dataset_labels(ds);
}

bench::Split split_of(std::size_t n, const json& split, bench::SplitMode mode = bench::SplitMode::holdout)
{
    if (split.value("train_all", false)) {
        bench::Split s;
        s.mode = mode;
        s.train.resize(n);
        std::iota(s.train.begin(), s.train.end(), std::size_t{0});
        s.test = s.train;
        return s;
    }
    return bench::make_split(n, {mode, split.at("holdout_fraction").get<double>(), split.at("seed").get<std::uint64_t>()});
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

// ---------------------------------------------------------------- simulate

int cmd_simulate(SimConfig& cfg, const std::string& config_file, std::size_t n, std::uint64_t seed,
                 const std::string& out, const std::string& format)
{
    if (!config_file.empty())
        cfg.apply_file(config_file);
    cfg.apply_flags();
    const auto ff = io::feature_format_from_string(format);
    Schedule sched = cfg.sched();
    if (ff == io::FeatureFormat::images)
        sched.keep_images = true;
    const Dataset ds = generate_dataset(n, cfg.geo(), cfg.imp(), sched, seed);
    const auto manifest = io::write_dataset(ds, out, ff);
    std::vector<std::size_t> per(static_cast<std::size_t>(ds.layout().size()), 0);
    for (const auto& s : ds.samples)
        ++per[static_cast<std::size_t>(s.true_sector)];
    print_json({{"manifest", manifest.string()}, {"n_samples", ds.size()}, {"samples_per_sector", per}});
    return 0;
}

// ---------------------------------------------------------------- label

int cmd_label(const std::string& dir, const std::string& method, const std::string& report_path, bool circular)
{
    const Dataset ds = io::read_dataset(dir);
    const auto profiles = intensity_profiles(ds);
    const auto sel = select_threshold(ds, profiles);
    const auto thr = threshold_label(ds, sel.params);
    json rep{{"method", method},
             {"threshold", {{"level", sel.params.level}, {"count_cut", sel.params.count_cut}}},
             {"threshold_conflicts", thr.conflicts.size()}};
    std::vector<int> labels = thr.labels;
    if (method == "kmeans") {
        KMeansOptions ko;
        ko.circular = circular;
        const auto km = kmeans_label(ds, profiles, ko);
        const auto agree = agreement_matrix(thr.labels, km.labels, ds.layout().size());
        rep["kmeans_iterations"] = km.result.iterations;
        rep["kmeans_converged"] = km.result.converged;
        rep["agreement_with_threshold"] = agree.plain_accuracy();
        rep["disagreements"] = agree.total() - agree.trace();
        labels = km.labels;
    }
    std::vector<std::size_t> per(static_cast<std::size_t>(ds.layout().size()), 0);
    for (int l : labels)
        ++per[static_cast<std::size_t>(l)];
    rep["samples_per_sector"] = per;
    io::update_labels(dir, labels);
    if (!report_path.empty())
        write_text(report_path, rep.dump(2) + "\n");
    print_json(rep);
    return 0;
}

// ---------------------------------------------------------------- train-classifier

int cmd_train_classifier(const DataArgs& data, ClassifierOptions opt, const std::string& config_file,
                         const std::string& model_out)
{
    if (!config_file.empty())
        opt = parse_config<ClassifierOptions>(load_json_file(config_file), config_file);
    const Dataset ds = io::read_dataset(data.dir);
    const auto labels = labels_of(ds, data.labels);
    const auto split = split_of(ds.size(), data.split_json());
    std::vector<const CompactIntensity*> xs;
    std::vector<int> ys;
    for (auto i : split.train) {
        xs.push_back(&ds.samples[i].intensity);
        ys.push_back(labels[i]);
    }
    const Classifier c = train_classifier<float>(xs, ys, opt);
    const auto row = bench::evaluate_classifier(to_string(opt.kind), c, ds, labels, split.test, 200);
    const json feature_spec{{"input", c.kind() == ClassifierKind::cnn ? "intensity_vectors" : "hue_histogram"},
                            {"n_bins", c.n_bins},
                            {"sensor_width", ds.geometry.sensor_width_px}};
    io::write_model(c, model_out, {{"classifier", opt}, {"split", data.split_json()}, {"dataset", data.dir}},
                    feature_spec);
    print_json({{"model", model_out},
                {"n_train", split.train.size()},
                {"n_test", split.test.size()},
                {"plain_accuracy", row.plain_accuracy},
                {"adjacency_tolerant_accuracy", row.adjacency_tolerant_accuracy},
                {"non_adjacent_errors", row.non_adjacent_errors},
                {"model_size_bytes", row.model_size_bytes}});
    return 0;
}

// ---------------------------------------------------------------- train-regressor

int cmd_train_regressor(const DataArgs& data, CalibrationOptions opt, const std::string& config_file,
                        const std::string& classifier_file, const std::string& model_out)
{
    if (!config_file.empty())
        opt = parse_config<CalibrationOptions>(load_json_file(config_file), config_file);
    const Dataset ds = io::read_dataset(data.dir);
    const auto labels = labels_of(ds, data.labels);
    const auto split = split_of(ds.size(), data.split_json());
    std::optional<Classifier> pre;
    if (!classifier_file.empty())
        pre = io::read_model<Classifier>(classifier_file);
    const EncoderModel m = calibrate(ds, split.train, labels, opt, pre);

    std::vector<bench::TestPoint> test;
    for (auto i : split.test) {
        const auto& s = ds.samples[i];
        bench::TestPoint t{i, s.timestamp, s.beta_ref_deg, s.direction, labels[i], 0.0};
        t.shift = reference_shift(m.bank, t.sector, combined_intensity(s.intensity).values);
        test.push_back(t);
    }
    const auto a = bench::evaluate_regressors(to_string(opt.regressor.kind), m.regressors, test, m.layout().size(),
                                              opt.regress_clockwise_only, opt.regressor.use_direction, 200);
    io::write_model(m, model_out,
                    {{"calibration", opt}, {"split", data.split_json()}, {"dataset", data.dir}},
                    {{"input", m.classifier.kind() == ClassifierKind::cnn ? "intensity_vectors" : "hue_histogram"},
                     {"n_bins", m.classifier.n_bins},
                     {"sensor_width", ds.geometry.sensor_width_px}});
    print_json({{"model", model_out},
                {"n_train", split.train.size()},
                {"n_test", split.test.size()},
                {"clockwise", bench::to_json(a.cw)},
                {"counter_clockwise", bench::to_json(a.ccw)},
                {"all", bench::to_json(a.all)},
                {"model_size_bytes", bench::serialized_size(m)}});
    return 0;
}

// ---------------------------------------------------------------- infer

int cmd_infer(const std::string& model_file, const DataArgs& data, const std::string& subset, const std::string& out)
{
    io::ModelHeader h;
    const auto m = io::read_model<EncoderModel>(model_file, &h);
    const Dataset ds = io::read_dataset(data.dir);
    std::vector<std::size_t> idx;
    if (subset == "all") {
        idx.resize(ds.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
    } else {
        const auto& cc = h.json.at("creation_config");
        if (!cc.contains("split"))
            throw InputError(model_file + ": no split recorded; use --subset all");
        const auto split = split_of(ds.size(), cc.at("split"));
        idx = subset == "test" ? split.test : split.train;
    }
    std::ostringstream csv;
    csv << "id,beta_ref,beta_est,error_arcsec,sector,shift,valid\n";
    std::vector<double> errors;
    std::size_t invalid = 0;
    char buf[256];
    for (auto i : idx) {
        const auto& s = ds.samples[i];
        try {
            const auto r = full_inference(m, s.intensity, s.direction);
            const double e = deg_to_arcsec(angle_diff_deg(r.beta_deg, s.beta_ref_deg));
            errors.push_back(e);
            std::snprintf(buf, sizeof buf, "%zu,%.9f,%.9f,%.4f,%d,%.6f,1\n", i, s.beta_ref_deg, r.beta_deg, e, r.sector,
                          r.shift);
        } catch (const MeasurementInvalid&) {
            ++invalid;
            std::snprintf(buf, sizeof buf, "%zu,%.9f,,,,,0\n", i, s.beta_ref_deg);
        }
        csv << buf;
    }
    if (out.empty() || out == "-")
        std::cout << csv.str();
    else
        write_text(out, csv.str());
    const auto st = error_stats(errors);
    std::cerr << json{{"n", idx.size()},
                      {"invalid", invalid},
                      {"sigma_arcsec", st.sigma},
                      {"peak_to_peak_arcsec", st.peak_to_peak}}
                     .dump()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------- eval

struct Threshold {
    std::string name;
    double value;
    std::string rule;
    bool pass;
};

json thresholds_json(const std::vector<Threshold>& ts)
{
    json a = json::array();
    for (const auto& t : ts)
        a.push_back({{"check", t.name}, {"value", t.value}, {"rule", t.rule}, {"pass", t.pass}});
    return a;
}

bool all_pass(const std::vector<Threshold>& ts)
{
    return std::all_of(ts.begin(), ts.end(), [](const Threshold& t) { return t.pass; });
}

void print_thresholds(const std::vector<Threshold>& ts)
{
    for (const auto& t : ts)
        std::fprintf(stderr, "%s  %-44s %12.5g  (%s)\n", t.pass ? "PASS" : "FAIL", t.name.c_str(), t.value,
                     t.rule.c_str());
}

std::vector<bench::ClassifierSpec> classifier_specs(const std::vector<std::string>& names, std::uint64_t seed)
{
    std::vector<bench::ClassifierSpec> out;
    for (const auto& n : names) {
        ClassifierOptions o;
        if (n.rfind("knn", 0) == 0) {
            o.kind = ClassifierKind::knn;
            o.knn_k = n.size() > 3 ? std::stoi(n.substr(3)) : 1;
        } else {
            o.kind = classifier_kind_from_string(n);
        }
        o.cnn_train.seed = seed + 1;
        out.push_back({n, o});
    }
    return out;
}

std::vector<bench::RegressorSpec> regressor_specs(const std::vector<std::string>& names, const RegressorOptions& base)
{
    std::vector<bench::RegressorSpec> out;
    for (const auto& n : names) {
        RegressorOptions o = base;
        const auto plus = n.find("+dir");
        o.kind = regressor_kind_from_string(n.substr(0, plus));
        o.use_direction = plus != std::string::npos;
        out.push_back({n, o, false});
    }
    return out;
}

std::vector<Threshold> regression_thresholds(const bench::ErrorReport& rep)
{
    std::vector<Threshold> ts;
    auto find = [&](const std::string& n) -> const bench::AlgorithmErrors* {
        for (const auto& a : rep.algorithms)
            if (a.name == n)
                return &a;
        return nullptr;
    };
    const auto *model = find("model"), *poly = find("poly"), *ffnn = find("ffnn"), *ffnn_dir = find("ffnn+dir");
    if (model) {
        const double s = model->primary().sigma;
        ts.push_back({"model-function sigma [arcsec]", s, "150 <= x <= 250", s >= 150.0 && s <= 250.0});
    }
    if (model && poly) {
        const double r = model->primary().sigma / poly->primary().sigma;
        ts.push_back({"sigma(model) / sigma(poly)", r, ">= 10", r >= 10.0});
    }
    if (const auto* f = ffnn_dir ? ffnn_dir : ffnn; model && f) {
        const double r = model->primary().sigma / f->primary().sigma;
        ts.push_back({"sigma(model) / sigma(" + f->name + ")", r, ">= 10", r >= 10.0});
    }
    if (poly && poly->clockwise_only) {
        const double r = poly->ccw.sigma / poly->cw.sigma;
        ts.push_back({"poly ccw sigma / cw sigma", r, ">= 5", r >= 5.0});
    }
    if (ffnn && ffnn_dir) {
        const double r = ffnn_dir->primary().sigma / ffnn->primary().sigma;
        ts.push_back({"sigma(ffnn+dir) / sigma(ffnn)", r, "<= 0.5", r <= 0.5});
    }
    return ts;
}

int cmd_eval(const DataArgs& data, const std::string& mode, std::vector<std::string> classifiers,
             std::vector<std::string> regressors, RegressorOptions base, const std::string& config_file,
             const std::string& out_dir, bool enforce)
{
    // "--classifiers ''" skips that half
    std::erase(classifiers, std::string{});
    std::erase(regressors, std::string{});
    if (!config_file.empty())
        base = parse_config<RegressorOptions>(load_json_file(config_file), config_file);
    const Dataset ds = io::read_dataset(data.dir);
    const auto labels = labels_of(ds, data.labels);
    auto split = split_of(ds.size(), data.split_json(),
                          mode == "holdout" ? bench::SplitMode::holdout : bench::SplitMode::direction_aware);
    const fs::path out(out_dir);
    fs::create_directories(out);
    std::vector<Threshold> ts;
    json report{{"disclaimer", bench::kDisclaimer}, {"dataset", data.dir}, {"split", data.split_json()}};
    report["split"]["mode"] = mode;

    if (!classifiers.empty()) {
        const auto rep
            = bench::run_classification_benchmark(ds, labels, classifier_specs(classifiers, data.split_seed), split);
        report["classification"] = bench::to_json(rep);
        for (const auto& r : rep.rows) {
            write_text(out / ("confusion_" + r.name + ".csv"), r.confusion.to_csv());
            ts.push_back({r.name + " adjacency-tolerant accuracy", r.adjacency_tolerant_accuracy, "== 1",
                          r.adjacency_tolerant_accuracy == 1.0});
            ts.push_back({r.name + " plain accuracy", r.plain_accuracy, ">= 0.999", r.plain_accuracy >= 0.999});
        }
    }
    if (!regressors.empty()) {
        const auto rep = bench::run_regression_benchmark(ds, labels, regressor_specs(regressors, base), split);
        report["regression"] = bench::to_json(rep);
        std::ostringstream errs;
        errs << "id,timestamp,beta_ref,direction,sector,shift";
        for (const auto& a : rep.algorithms)
            errs << "," << a.name;
        errs << "\n";
        char buf[128];
        for (std::size_t j = 0; j < rep.test.size(); ++j) {
            const auto& t = rep.test[j];
            std::snprintf(buf, sizeof buf, "%zu,%llu,%.9f,%s,%d,%.6f", t.index,
                          static_cast<unsigned long long>(t.timestamp), t.beta_ref_deg, to_string(t.direction).c_str(),
                          t.sector, t.shift);
            errs << buf;
            for (const auto& a : rep.algorithms) {
                std::snprintf(buf, sizeof buf, ",%.4f", a.error_arcsec[j]);
                errs << buf;
            }
            errs << "\n";
        }
        write_text(out / "errors.csv", errs.str());
        for (const auto& a : rep.algorithms) {
            std::ostringstream curve, trace;
            curve << "beta_deg,n,mean_arcsec,sigma_arcsec,min_arcsec,max_arcsec\n";
            for (const auto& p : bench::binned_error_curve(rep, a, 1.0)) {
                std::snprintf(buf, sizeof buf, "%.1f,%zu,%.4f,%.4f,%.4f,%.4f\n", p.x, p.n, p.mean, p.sigma, p.min, p.max);
                curve << buf;
            }
            trace << "timestamp,error_arcsec\n";
            for (const auto& [t, e] : bench::time_ordered_trace(rep, a)) {
                std::snprintf(buf, sizeof buf, "%llu,%.4f\n", static_cast<unsigned long long>(t), e);
                trace << buf;
            }
            write_text(out / ("curve_" + a.name + ".csv"), curve.str());
            write_text(out / ("trace_" + a.name + ".csv"), trace.str());
        }
        const auto rt = regression_thresholds(rep);
        ts.insert(ts.end(), rt.begin(), rt.end());
    }
    report["thresholds"] = thresholds_json(ts);
    write_text(out / "report.json", report.dump(2) + "\n");
    print_thresholds(ts);
    std::cout << (out / "report.json").string() << "\n";
    return enforce && !all_pass(ts) ? kExitThreshold : 0;
}

// ---------------------------------------------------------------- ecc-test

int cmd_ecc_test(SimConfig& cfg, const std::string& config_file, bench::EccentricityOptions opt,
                 const std::string& out, bool enforce)
{
    if (!config_file.empty())
        cfg.apply_file(config_file);
    cfg.apply_flags();
    const auto imp = cfg.imp();
    const auto rep = bench::run_eccentricity_test(cfg.geo(), imp, opt);
    std::vector<Threshold> ts;
    ts.push_back({"p2p strictly increasing with e", rep.p2p_strictly_increasing ? 1.0 : 0.0, "== 1",
                  rep.p2p_strictly_increasing});
    const double rel = std::abs(rep.slope_arcsec_per_mm / rep.configured_slope_arcsec_per_mm - 1.0);
    ts.push_back({"p2p slope [arcsec/mm]", rep.slope_arcsec_per_mm,
                  "within 25% of " + std::to_string(rep.configured_slope_arcsec_per_mm), rel <= 0.25});
    for (const auto& r : rep.rows)
        ts.push_back({r.name + " adjacency-tolerant accuracy", r.adjacency_tolerant_accuracy, ">= 0.99",
                      r.adjacency_tolerant_accuracy >= 0.99});
    json j = bench::to_json(rep);
    j["thresholds"] = thresholds_json(ts);
    if (!out.empty())
        write_text(out, j.dump(2) + "\n");
    print_thresholds(ts);
    print_json(j);
    return enforce && !all_pass(ts) ? kExitThreshold : 0;
}

// ---------------------------------------------------------------- bench-timing

int cmd_bench_timing(const std::string& model_file, const std::string& dir, std::size_t runs, std::size_t n_samples,
                     const std::string& out, bool enforce)
{
    const auto m = io::read_model<EncoderModel>(model_file);
    const Dataset ds = io::read_dataset(dir);
    std::vector<std::size_t> idx;
    const std::size_t step = std::max<std::size_t>(1, ds.size() / std::max<std::size_t>(1, n_samples));
    for (std::size_t i = 0; i < ds.size() && idx.size() < n_samples; i += step)
        idx.push_back(i);
    const auto rows = bench::timing_and_size_report(m, ds, idx, runs);
    std::vector<Threshold> ts;
    for (const auto& r : rows) {
        if (r.name == "regressor:poly")
            ts.push_back({"polynomial median latency [us]", r.latency.median_us, "<= 10", r.latency.median_us <= 10.0});
        if (r.name == "full_inference")
            ts.push_back({"full inference median latency [us]", r.latency.median_us, "<= 50000",
                          r.latency.median_us <= 50000.0});
    }
    json j = bench::to_json(rows);
    j["model_file_bytes"] = fs::file_size(model_file);
    j["thresholds"] = thresholds_json(ts);
    if (!out.empty())
        write_text(out, j.dump(2) + "\n");
    print_thresholds(ts);
    print_json(j);
    return enforce && !all_pass(ts) ? kExitThreshold : 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Calibration pipeline for a colour-shadow absolute rotary encoder (simulated)."};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a synthetic calibration dataset");
    SimConfig sim_cfg;
    std::string sim_config, sim_out, sim_format = "binary";
    std::size_t sim_n = 16786;
    std::uint64_t sim_seed = 1;
    sim->add_option("--config", sim_config, "flat JSON file with simulator fields");
    sim->add_option("--n-samples", sim_n, "number of samples");
    sim->add_option("--seed", sim_seed, "random seed");
    sim->add_option("--out", sim_out, "output dataset directory")->required();
    sim->add_option("--format", sim_format, "feature storage")->check(CLI::IsMember({"binary", "csv", "images"}));
    sim_cfg.add_flags(sim);

    // label
    auto* lab = app.add_subcommand("label", "assign sector labels and write them into the manifest");
    std::string lab_dir, lab_method = "kmeans", lab_report;
    bool lab_circular = false;
    lab->add_option("--data", lab_dir, "dataset directory")->required();
    lab->add_option("--method", lab_method, "labelling method")->check(CLI::IsMember({"kmeans", "threshold"}));
    lab->add_option("--report", lab_report, "write the labelling report here");
    lab->add_flag("--circular", lab_circular, "k-Means on (cos beta, sin beta, intensity)");

    // train-classifier
    auto* tc = app.add_subcommand("train-classifier", "train a sector classifier");
    DataArgs tc_data;
    ClassifierOptions tc_opt;
    std::string tc_algo = "knn", tc_config, tc_out;
    tc_data.add(tc);
    tc->add_option("--algo", tc_algo, "classifier")->check(CLI::IsMember({"knn", "tree", "svm", "cnn"}));
    tc->add_option("--k", tc_opt.knn_k, "kNN neighbours");
    tc->add_option("--bins", tc_opt.n_bins, "hue histogram bins (0 = per-algorithm default)");
    tc->add_option("--max-splits", tc_opt.tree_max_splits, "decision tree split budget");
    tc->add_option("--C", tc_opt.svm_C, "SVM regularisation constant");
    tc->add_option("--cnn-epochs", tc_opt.cnn_train.max_epochs, "CNN epoch cap");
    tc->add_option("--cnn-lr", tc_opt.cnn_train.learning_rate, "CNN learning rate");
    tc->add_option("--cnn-seed", tc_opt.cnn_train.seed, "CNN initialisation seed");
    tc->add_option("--config", tc_config, "JSON classifier options (replaces the flags)");
    tc->add_option("--model-out", tc_out, "model file")->required();

    // train-regressor
    auto* tr = app.add_subcommand("train-regressor", "calibrate: classifier, references and per-sector regressors");
    DataArgs tr_data;
    CalibrationOptions tr_opt;
    std::string tr_algo = "poly", tr_config, tr_out, tr_classifier, tr_cls_algo = "knn";
    bool tr_no_preshift = false;
    tr_data.add(tr);
    tr->add_option("--algo", tr_algo, "regressor")->check(CLI::IsMember({"model", "poly", "ffnn", "gp"}));
    tr->add_flag("--use-direction", tr_opt.regressor.use_direction, "direction as a second input (ffnn, gp)");
    tr->add_flag("--per-direction", tr_opt.regressor.per_direction_polynomial, "one polynomial per direction");
    tr->add_flag("--clockwise-only", tr_opt.regress_clockwise_only, "fit regressors on clockwise samples only");
    tr->add_option("--degree", tr_opt.regressor.degree, "fixed polynomial degree (0 = select)");
    tr->add_option("--max-degree-two", tr_opt.regressor.max_degree_two_shadow, "degree cap, two-shadow sectors");
    tr->add_option("--max-degree-single", tr_opt.regressor.max_degree_single_shadow, "degree cap, single sectors");
    tr->add_option("--hidden-two", tr_opt.regressor.hidden_two_shadow, "FFNN hidden units, two-shadow sectors");
    tr->add_option("--hidden-single", tr_opt.regressor.hidden_single_shadow, "FFNN hidden units, single sectors");
    tr->add_option("--epochs", tr_opt.regressor.ffnn.max_epochs, "FFNN epoch cap");
    tr->add_option("--restarts", tr_opt.regressor.ffnn.restarts, "FFNN random restarts");
    tr->add_option("--gp-max-points", tr_opt.regressor.gp.max_points, "GP conditioning set cap");
    tr->add_option("--gp-hyper-points", tr_opt.regressor.gp.hyper_points, "GP hyperparameter subsample");
    tr->add_option("--seed", tr_opt.regressor.ffnn.seed, "FFNN / GP seed");
    tr->add_option("--neighbors", tr_opt.n_neighbors, "boundary samples borrowed from each adjacent sector");
    tr->add_flag("--no-preshift", tr_no_preshift, "always correlate over the full lag range");
    tr->add_option("--window", tr_opt.inference.window_half_width, "pre-shift window half-width [px]");
    tr->add_option("--classifier", tr_classifier, "use this trained classifier model");
    tr->add_option("--classifier-algo", tr_cls_algo, "classifier to train when --classifier is absent")
        ->check(CLI::IsMember({"knn", "tree", "svm", "cnn"}));
    tr->add_option("--config", tr_config, "JSON calibration options (replaces the flags)");
    tr->add_option("--model-out", tr_out, "model file")->required();

    // infer
    auto* inf = app.add_subcommand("infer", "run the full pipeline on a dataset, one CSV row per sample");
    std::string inf_model, inf_subset = "all", inf_out;
    DataArgs inf_data;
    inf->add_option("--model", inf_model, "encoder model file")->required();
    inf_data.add(inf, false);
    inf->add_option("--subset", inf_subset, "samples: all, or the train/test split recorded in the model")
        ->check(CLI::IsMember({"all", "train", "test"}));
    inf->add_option("--out", inf_out, "CSV file (default stdout)");

    // eval
    auto* ev = app.add_subcommand("eval", "classification and regression benchmarks");
    DataArgs ev_data;
    std::string ev_mode = "direction-aware", ev_config, ev_out = "eval_out";
    std::vector<std::string> ev_cls{"knn1", "knn10", "knn100", "tree", "svm", "cnn"};
    std::vector<std::string> ev_reg{"model", "poly", "ffnn", "ffnn+dir"};
    RegressorOptions ev_base;
    bool ev_no_enforce = false;
    ev_data.add(ev);
    ev->add_option("--split-mode", ev_mode, "split mode")->check(CLI::IsMember({"holdout", "direction-aware"}));
    ev->add_option("--classifiers", ev_cls, "knnK, tree, svm, cnn (empty to skip)")->delimiter(',');
    ev->add_option("--regressors", ev_reg, "model, poly, ffnn, gp, with optional +dir (empty to skip)")->delimiter(',');
    ev->add_option("--epochs", ev_base.ffnn.max_epochs, "FFNN epoch cap");
    ev->add_option("--restarts", ev_base.ffnn.restarts, "FFNN random restarts");
    ev->add_option("--config", ev_config, "JSON regressor options used as the base of every regressor");
    ev->add_option("--out", ev_out, "output directory");
    ev->add_flag("--no-enforce", ev_no_enforce, "exit 0 even when a threshold fails");

    // ecc-test
    auto* ecc = app.add_subcommand("ecc-test", "eccentricity tolerance test");
    SimConfig ecc_cfg;
    bench::EccentricityOptions ecc_opt;
    std::string ecc_config, ecc_out;
    bool ecc_no_enforce = false;
    ecc->add_option("--config", ecc_config, "flat JSON file with simulator fields");
    ecc->add_option("--seed", ecc_opt.seed, "random seed");
    ecc->add_option("--n-train", ecc_opt.n_train, "Ecc0 training samples");
    ecc->add_option("--n-holdout", ecc_opt.n_holdout, "Ecc0 held-out samples");
    ecc->add_option("--eccentricities", ecc_opt.test_eccentricities_mm, "eccentric set offsets [mm]")->delimiter(',');
    ecc->add_option("--sizes", ecc_opt.test_sizes, "eccentric set sizes")->delimiter(',');
    ecc->add_option("--out", ecc_out, "report file");
    ecc->add_flag("--no-enforce", ecc_no_enforce, "exit 0 even when a threshold fails");
    ecc_cfg.add_flags(ecc);

    // bench-timing
    auto* bt = app.add_subcommand("bench-timing", "single-sample latency and size of each pipeline stage");
    std::string bt_model, bt_data, bt_out;
    std::size_t bt_runs = 1000, bt_samples = 500;
    bool bt_no_enforce = false;
    bt->add_option("--model", bt_model, "encoder model file")->required();
    bt->add_option("--data", bt_data, "dataset directory supplying inputs")->required();
    bt->add_option("--runs", bt_runs, "timed runs per stage (at least 100)");
    bt->add_option("--samples", bt_samples, "distinct inputs cycled through");
    bt->add_option("--out", bt_out, "report file");
    bt->add_flag("--no-enforce", bt_no_enforce, "exit 0 even when a threshold fails");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(sim_cfg, sim_config, sim_n, sim_seed, sim_out, sim_format);
        if (lab->parsed())
            return cmd_label(lab_dir, lab_method, lab_report, lab_circular);
        if (tc->parsed()) {
            tc_opt.kind = classifier_kind_from_string(tc_algo);
            return cmd_train_classifier(tc_data, tc_opt, tc_config, tc_out);
        }
        if (tr->parsed()) {
            tr_opt.regressor.kind = regressor_kind_from_string(tr_algo);
            tr_opt.regressor.gp.seed = tr_opt.regressor.ffnn.seed;
            tr_opt.classifier.kind = classifier_kind_from_string(tr_cls_algo);
            tr_opt.use_preshift = !tr_no_preshift;
            return cmd_train_regressor(tr_data, tr_opt, tr_config, tr_classifier, tr_out);
        }
        if (inf->parsed())
            return cmd_infer(inf_model, inf_data, inf_subset, inf_out);
        if (ev->parsed())
            return cmd_eval(ev_data, ev_mode, ev_cls, ev_reg, ev_base, ev_config, ev_out, !ev_no_enforce);
        if (ecc->parsed())
            return cmd_ecc_test(ecc_cfg, ecc_config, ecc_opt, ecc_out, !ecc_no_enforce);
        if (bt->parsed())
            return cmd_bench_timing(bt_model, bt_data, bt_runs, bt_samples, bt_out, !bt_no_enforce);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return 0;
}
