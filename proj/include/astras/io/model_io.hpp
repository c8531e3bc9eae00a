#ifndef ASTRAS_IO_MODEL_IO_HPP
#define ASTRAS_IO_MODEL_IO_HPP

// *.astras-model: magic, version, JSON header, binary payload, checksum.
// Byte layout in docs/formats.md.

#include "astras/io/binary.hpp"
#include "astras/io/config_json.hpp"

namespace astras::io {

inline constexpr unsigned kModelFormatVersion = 1;
inline constexpr char kModelMagic[8] = {'A', 'S', 'T', 'R', 'A', 'S', 'M', 'D'};

namespace ser {

inline void put(ByteWriter& w, const KnnModel& m)
{
    w.put<std::int32_t>(m.k);
    w.put<std::int32_t>(m.n_classes);
    w.put<std::uint64_t>(m.dim);
    w.put_vector(m.x);
    w.put_vector<std::int32_t>({m.y.begin(), m.y.end()});
}
inline void get(ByteReader& r, KnnModel& m)
{
    m.k = r.get<std::int32_t>();
    m.n_classes = r.get<std::int32_t>();
    m.dim = r.get<std::uint64_t>();
    m.x = r.get_vector<double>();
    const auto y = r.get_vector<std::int32_t>();
    m.y.assign(y.begin(), y.end());
    if (m.dim == 0 || m.x.size() != m.dim * m.y.size())
        throw FormatError("knn payload: matrix size does not match labels");
}

inline void put(ByteWriter& w, const TreeModel& m)
{
    w.put<std::int32_t>(m.n_classes);
    w.put<std::uint64_t>(m.dim);
    w.put<std::int32_t>(m.max_splits);
    w.put<std::uint64_t>(m.nodes.size());
    for (const auto& n : m.nodes) {
        w.put<std::int32_t>(n.feature);
        w.put<double>(n.threshold);
        w.put<std::int32_t>(n.left);
        w.put<std::int32_t>(n.right);
        w.put<std::int32_t>(n.label);
        w.put<double>(n.confidence);
        w.put<std::uint32_t>(n.n_samples);
        w.put<double>(n.impurity);
        w.put<double>(n.gain);
    }
}
inline void get(ByteReader& r, TreeModel& m)
{
    m.n_classes = r.get<std::int32_t>();
    m.dim = r.get<std::uint64_t>();
    m.max_splits = r.get<std::int32_t>();
    const auto n = r.get<std::uint64_t>();
    if (n > r.remaining() / 48)
        throw FormatError("tree payload: node count exceeds the remaining bytes");
    m.nodes.resize(n);
    for (auto& t : m.nodes) {
        t.feature = r.get<std::int32_t>();
        t.threshold = r.get<double>();
        t.left = r.get<std::int32_t>();
        t.right = r.get<std::int32_t>();
        t.label = r.get<std::int32_t>();
        t.confidence = r.get<double>();
        t.n_samples = r.get<std::uint32_t>();
        t.impurity = r.get<double>();
        t.gain = r.get<double>();
    }
    const auto N = static_cast<int>(m.nodes.size());
    for (const auto& t : m.nodes)
        if (t.feature >= 0 && (t.left <= 0 || t.left >= N || t.right <= 0 || t.right >= N
                               || static_cast<std::size_t>(t.feature) >= m.dim))
            throw FormatError("tree payload: node references out of range");
}

inline void put(ByteWriter& w, const SvmModel& m)
{
    w.put<std::int32_t>(m.n_classes);
    w.put<double>(m.C);
    w.put_vector(m.standardizer.mean);
    w.put_vector(m.standardizer.scale);
    w.put<std::uint64_t>(m.machines.size());
    for (const auto& s : m.machines) {
        w.put<std::int32_t>(s.positive);
        w.put<std::int32_t>(s.negative);
        w.put_vector(s.w);
        w.put<double>(s.bias);
    }
}
inline void get(ByteReader& r, SvmModel& m)
{
    m.n_classes = r.get<std::int32_t>();
    m.C = r.get<double>();
    m.standardizer.mean = r.get_vector<double>();
    m.standardizer.scale = r.get_vector<double>();
    const auto n = r.get<std::uint64_t>();
    if (n > r.remaining() / 24)
        throw FormatError("svm payload: machine count exceeds the remaining bytes");
    m.machines.resize(n);
    for (auto& s : m.machines) {
        s.positive = r.get<std::int32_t>();
        s.negative = r.get<std::int32_t>();
        s.w = r.get_vector<double>();
        s.bias = r.get<double>();
        if (s.w.size() != m.standardizer.mean.size())
            throw FormatError("svm payload: weight length does not match the feature dimension");
    }
}

inline void put(ByteWriter& w, const CnnSpec& s)
{
    for (int v : {s.width, s.channels, s.filters, s.kernel, s.stride, s.pool, s.pool_stride, s.classes})
        w.put<std::int32_t>(v);
    w.put<double>(s.dropout);
}
inline void get(ByteReader& r, CnnSpec& s)
{
    for (int* v : {&s.width, &s.channels, &s.filters, &s.kernel, &s.stride, &s.pool, &s.pool_stride, &s.classes})
        *v = r.get<std::int32_t>();
    s.dropout = r.get<double>();
    try {
        s.validate();
    } catch (const ConfigError& e) {
        throw FormatError(std::string("cnn payload: ") + e.what());
    }
}

inline void put(ByteWriter& w, const CnnModel& m)
{
    put(w, m.spec);
    for (const auto* v : {&m.input_mean, &m.conv_w, &m.conv_b, &m.bn_gamma, &m.bn_beta, &m.bn_mean, &m.bn_var, &m.fc_w,
                          &m.fc_b})
        w.put_vector(*v);
    w.put<std::int32_t>(m.epochs);
    w.put<double>(m.validation_accuracy);
    w.put_bool(m.below_target);
}
inline void get(ByteReader& r, CnnModel& m)
{
    get(r, m.spec);
    for (auto* v : {&m.input_mean, &m.conv_w, &m.conv_b, &m.bn_gamma, &m.bn_beta, &m.bn_mean, &m.bn_var, &m.fc_w,
                    &m.fc_b})
        *v = r.get_vector<double>();
    m.epochs = r.get<std::int32_t>();
    m.validation_accuracy = r.get<double>();
    m.below_target = r.get_bool();
    const auto& s = m.spec;
    const auto F = static_cast<std::size_t>(s.filters);
    if (m.input_mean.size() != static_cast<std::size_t>(s.channels * s.width)
        || m.conv_w.size() != F * static_cast<std::size_t>(s.patch()) || m.conv_b.size() != F
        || m.bn_gamma.size() != F || m.bn_beta.size() != F || m.bn_mean.size() != F || m.bn_var.size() != F
        || m.fc_w.size() != static_cast<std::size_t>(s.classes * s.dense_in())
        || m.fc_b.size() != static_cast<std::size_t>(s.classes))
        throw FormatError("cnn payload: tensor sizes do not match the layer spec");
}

inline void put(ByteWriter& w, const Classifier& c)
{
    w.put<std::int32_t>(c.n_bins);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(c.model.index()));
    std::visit([&](const auto& m) { put(w, m); }, c.model);
}
inline void get(ByteReader& r, Classifier& c)
{
    c.n_bins = r.get<std::int32_t>();
    switch (r.get<std::uint8_t>()) {
    case 0: c.model = KnnModel{}; break;
    case 1: c.model = TreeModel{}; break;
    case 2: c.model = SvmModel{}; break;
    case 3: c.model = CnnModel{}; break;
    default: throw FormatError("classifier payload: unknown classifier kind");
    }
    std::visit([&](auto& m) { get(r, m); }, c.model);
}

inline void put(ByteWriter& w, const ReferenceBank& b)
{
    w.put<std::uint64_t>(b.intensity.size());
    for (const auto& v : b.intensity)
        w.put_vector(v);
    w.put_vector(b.beta_ref_deg);
}
inline void get(ByteReader& r, ReferenceBank& b)
{
    const auto n = r.get<std::uint64_t>();
    if (n > r.remaining() / 8)
        throw FormatError("reference bank: count exceeds the remaining bytes");
    b.intensity.resize(n);
    for (auto& v : b.intensity)
        v = r.get_vector<double>();
    b.beta_ref_deg = r.get_vector<double>();
    if (b.beta_ref_deg.size() != n)
        throw FormatError("reference bank: one reference angle per pattern required");
}

inline void put(ByteWriter& w, const PreshiftModel& m)
{
    w.put<std::uint64_t>(m.downsample);
    w.put<double>(m.spread);
    w.put_vector(m.mean);
    w.put_vector(m.scale);
    w.put_vector(m.x);
    w.put_vector(m.y);
}
inline void get(ByteReader& r, PreshiftModel& m)
{
    m.downsample = r.get<std::uint64_t>();
    m.spread = r.get<double>();
    m.mean = r.get_vector<double>();
    m.scale = r.get_vector<double>();
    m.x = r.get_vector<double>();
    m.y = r.get_vector<double>();
    if (m.scale.size() != m.mean.size() || m.x.size() != m.mean.size() * m.y.size())
        throw FormatError("pre-shift payload: sizes do not agree");
}

inline void put(ByteWriter& w, const ModelFunction& m)
{
    w.put<double>(m.beta_s_deg);
    w.put<double>(m.d_s_px_per_rad);
    w.put_bool(m.has_reference);
    w.put<double>(m.reference_deg);
    w.put_bool(m.identifiable);
    w.put<std::int32_t>(m.iterations);
}
inline void get(ByteReader& r, ModelFunction& m)
{
    m.beta_s_deg = r.get<double>();
    m.d_s_px_per_rad = r.get<double>();
    m.has_reference = r.get_bool();
    m.reference_deg = r.get<double>();
    m.identifiable = r.get_bool();
    m.iterations = r.get<std::int32_t>();
}

inline void put(ByteWriter& w, const Polynomial& p)
{
    w.put<double>(p.center_deg);
    w.put<double>(p.shift_lo);
    w.put<double>(p.shift_hi);
    w.put_vector(p.coef);
    w.put<std::int32_t>(p.requested_degree);
}
inline void get(ByteReader& r, Polynomial& p)
{
    p.center_deg = r.get<double>();
    p.shift_lo = r.get<double>();
    p.shift_hi = r.get<double>();
    p.coef = r.get_vector<double>();
    p.requested_degree = r.get<std::int32_t>();
    if (p.coef.empty())
        throw FormatError("polynomial payload: no coefficients");
}

inline void put(ByteWriter& w, const PolynomialRegressor& p)
{
    put(w, p.cw);
    w.put_bool(p.ccw.has_value());
    if (p.ccw)
        put(w, *p.ccw);
}
inline void get(ByteReader& r, PolynomialRegressor& p)
{
    get(r, p.cw);
    if (r.get_bool()) {
        p.ccw.emplace();
        get(r, *p.ccw);
    } else {
        p.ccw.reset();
    }
}

inline void put(ByteWriter& w, const Ffnn& m)
{
    w.put<std::int32_t>(m.n_in);
    w.put<std::int32_t>(m.n_hidden);
    w.put<double>(m.center_deg);
    w.put_vector(m.in_mean);
    w.put_vector(m.in_scale);
    w.put<double>(m.out_mean);
    w.put<double>(m.out_scale);
    w.put_vector(m.parameters());
    w.put<double>(m.train_rmse_deg);
    w.put<double>(m.validation_rmse_deg);
    w.put_bool(m.below_target);
}
inline void get(ByteReader& r, Ffnn& m)
{
    m.n_in = r.get<std::int32_t>();
    m.n_hidden = r.get<std::int32_t>();
    if ((m.n_in != 1 && m.n_in != 2) || m.n_hidden < 1)
        throw FormatError("ffnn payload: bad layer sizes");
    m.center_deg = r.get<double>();
    m.in_mean = r.get_vector<double>();
    m.in_scale = r.get_vector<double>();
    if (m.in_mean.size() != static_cast<std::size_t>(m.n_in) || m.in_scale.size() != m.in_mean.size())
        throw FormatError("ffnn payload: input transform does not match the input count");
    m.out_mean = r.get<double>();
    m.out_scale = r.get<double>();
    const auto p = r.get_vector<double>();
    try {
        m.set_parameters(p);
    } catch (const InputError&) {
        throw FormatError("ffnn payload: parameter count does not match the layer sizes");
    }
    m.train_rmse_deg = r.get<double>();
    m.validation_rmse_deg = r.get<double>();
    m.below_target = r.get_bool();
}

inline void put(ByteWriter& w, const GaussianProcess& g)
{
    w.put<std::int32_t>(g.n_in);
    w.put<double>(g.center_deg);
    w.put<double>(g.nominal_sensitivity);
    w.put_vector(g.in_mean);
    w.put_vector(g.in_scale);
    w.put<double>(g.hyper.signal_sd);
    w.put<double>(g.hyper.length);
    w.put<double>(g.hyper.noise_sd);
    w.put<double>(g.c);
    w.put<double>(g.jitter);
    w.put_vector(g.x);
    w.put_vector(g.alpha);
    w.put<double>(g.log_marginal_likelihood);
}
inline void get(ByteReader& r, GaussianProcess& g)
{
    g.n_in = r.get<std::int32_t>();
    if (g.n_in != 1 && g.n_in != 2)
        throw FormatError("gp payload: bad input count");
    g.center_deg = r.get<double>();
    g.nominal_sensitivity = r.get<double>();
    g.in_mean = r.get_vector<double>();
    g.in_scale = r.get_vector<double>();
    g.hyper.signal_sd = r.get<double>();
    g.hyper.length = r.get<double>();
    g.hyper.noise_sd = r.get<double>();
    g.c = r.get<double>();
    g.jitter = r.get<double>();
    g.x = r.get_vector<double>();
    g.alpha = r.get_vector<double>();
    g.log_marginal_likelihood = r.get<double>();
    if (g.in_mean.size() != static_cast<std::size_t>(g.n_in) || g.in_scale.size() != g.in_mean.size()
        || g.x.size() != g.alpha.size() * static_cast<std::size_t>(g.n_in))
        throw FormatError("gp payload: sizes do not agree");
}

inline void put(ByteWriter& w, const SectorRegressor& s)
{
    w.put<std::int32_t>(s.sector);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(s.model.index()));
    std::visit([&](const auto& m) { put(w, m); }, s.model);
}
inline void get(ByteReader& r, SectorRegressor& s)
{
    s.sector = r.get<std::int32_t>();
    switch (r.get<std::uint8_t>()) {
    case 0: s.model = ModelFunction{}; break;
    case 1: s.model = PolynomialRegressor{}; break;
    case 2: s.model = Ffnn{}; break;
    case 3: s.model = GaussianProcess{}; break;
    default: throw FormatError("regressor payload: unknown regressor kind");
    }
    std::visit([&](auto& m) { get(r, m); }, s.model);
}

inline void put(ByteWriter& w, const EncoderModel& m)
{
    w.put<std::int32_t>(m.n_mirrors);
    w.put<double>(m.single_span_deg);
    w.put<double>(m.two_span_deg);
    w.put<double>(m.nominal_sensitivity);
    put(w, m.classifier);
    put(w, m.bank);
    w.put<std::uint64_t>(m.preshift.size());
    for (const auto& p : m.preshift)
        put(w, p);
    w.put<std::uint64_t>(m.regressors.size());
    for (const auto& s : m.regressors)
        put(w, s);
    w.put<std::int32_t>(m.inference.window_half_width);
    w.put<double>(m.inference.min_confidence);
}
inline void get(ByteReader& r, EncoderModel& m)
{
    m.n_mirrors = r.get<std::int32_t>();
    m.single_span_deg = r.get<double>();
    m.two_span_deg = r.get<double>();
    m.nominal_sensitivity = r.get<double>();
    get(r, m.classifier);
    get(r, m.bank);
    const int n_sec = 2 * m.n_mirrors;
    auto count = [&](const char* what) {
        const auto n = r.get<std::uint64_t>();
        if (n != 0 && n != static_cast<std::uint64_t>(n_sec))
            throw FormatError(std::string("encoder payload: ") + what + " count does not match the sector count");
        return static_cast<std::size_t>(n);
    };
    m.preshift.resize(count("pre-shift model"));
    for (auto& p : m.preshift)
        get(r, p);
    m.regressors.resize(count("regressor"));
    for (auto& s : m.regressors)
        get(r, s);
    m.inference.window_half_width = r.get<std::int32_t>();
    m.inference.min_confidence = r.get<double>();
    if (m.bank.size() != n_sec || m.regressors.size() != static_cast<std::size_t>(n_sec))
        throw FormatError("encoder payload: reference bank or regressors do not cover every sector");
}

} // namespace ser

template <class T>
struct ModelKind;
template <>
struct ModelKind<EncoderModel> {
    static constexpr const char* name = "encoder";
};
template <>
struct ModelKind<Classifier> {
    static constexpr const char* name = "classifier";
};

struct ModelHeader {
    std::string kind;
    unsigned format_version = 0;
    nlohmann::json json;
};

/// Header: kind, version, feature spec, and whatever creation config the
/// caller passes.
template <class T>
void write_model(const T& model, const std::filesystem::path& path, const nlohmann::json& creation_config = {},
                 const nlohmann::json& feature_spec = {})
{
    nlohmann::json head{{"kind", ModelKind<T>::name},
                        {"format_version", kModelFormatVersion},
                        {"feature_spec", feature_spec},
                        {"creation_config", creation_config}};
    const std::string h = head.dump();
    ByteWriter payload;
    ser::put(payload, model);

    ByteWriter w;
    w.put_bytes(kModelMagic, 8);
    w.put<std::uint32_t>(kModelFormatVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(h.size()));
    w.put_bytes(h.data(), h.size());
    w.put<std::uint64_t>(payload.bytes().size());
    w.put_bytes(payload.bytes().data(), payload.bytes().size());
    w.put<std::uint64_t>(fnv1a64(w.bytes().data(), w.bytes().size()));
    atomic_write(path, w.bytes());
}

namespace detail {

/// Verifies magic, version and checksum; returns the header and a reader
/// positioned at the start of the payload.
inline ModelHeader open_model(const std::vector<std::uint8_t>& bytes, const std::string& name,
                              std::size_t& payload_pos, std::size_t& payload_len)
{
    ByteReader r(bytes.data(), bytes.size(), name);
    if (bytes.size() < 8 || std::memcmp(r.take(8), kModelMagic, 8) != 0)
        throw FormatError(name + ": not an astras model file");
    const auto version = r.get<std::uint32_t>();
    if (version != kModelFormatVersion)
        throw VersionError(name + ": model format version " + std::to_string(version) + ", this build reads version "
                               + std::to_string(kModelFormatVersion),
                           version, kModelFormatVersion);
    const auto hlen = r.get<std::uint32_t>();
    const auto* hp = r.take(hlen);
    ModelHeader h;
    try {
        h.json = nlohmann::json::parse(hp, hp + hlen);
        h.kind = h.json.at("kind").get<std::string>();
        h.format_version = h.json.at("format_version").get<unsigned>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(name + ": header: " + e.what());
    }
    payload_len = static_cast<std::size_t>(r.get<std::uint64_t>());
    if (payload_len > r.remaining() || r.remaining() - payload_len != 8)
        throw FormatError(name + ": truncated or oversized payload");
    payload_pos = r.position();
    r.take(payload_len);
    const auto stored = r.get<std::uint64_t>();
    if (stored != fnv1a64(bytes.data(), bytes.size() - 8))
        throw FormatError(name + ": checksum mismatch");
    return h;
}

} // namespace detail

inline ModelHeader read_model_header(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    std::size_t pos = 0, len = 0;
    return detail::open_model(bytes, path.string(), pos, len);
}

template <class T>
T read_model(const std::filesystem::path& path, ModelHeader* header = nullptr)
{
    const auto bytes = read_file(path);
    std::size_t pos = 0, len = 0;
    auto h = detail::open_model(bytes, path.string(), pos, len);
    if (h.kind != ModelKind<T>::name)
        throw FormatError(path.string() + ": expected a '" + ModelKind<T>::name + "' model, found '" + h.kind + "'");
    ByteReader r(bytes.data() + pos, len, path.string());
    T model;
    ser::get(r, model);
    if (r.remaining() != 0)
        throw FormatError(path.string() + ": trailing payload bytes");
    if (header)
        *header = std::move(h);
    return model;
}

} // namespace astras::io

#endif // ASTRAS_IO_MODEL_IO_HPP
