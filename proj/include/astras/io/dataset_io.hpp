#ifndef ASTRAS_IO_DATASET_IO_HPP
#define ASTRAS_IO_DATASET_IO_HPP

// Dataset directory: manifest.jsonl, config.snapshot, features/ or images/.
// Byte layout in docs/formats.md.

#include "astras/io/binary.hpp"
#include "astras/io/config_json.hpp"

#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace astras::io {

inline constexpr unsigned kDatasetFormatVersion = 1;
inline constexpr std::size_t kSamplesPerPart = 1024;
inline constexpr char kFeatureMagic[8] = {'A', 'S', 'T', 'R', 'F', 'E', 'A', 'T'};

enum class FeatureFormat { csv, binary, images };

inline std::string to_string(FeatureFormat f)
{
    switch (f) {
    case FeatureFormat::csv: return "csv";
    case FeatureFormat::binary: return "binary";
    case FeatureFormat::images: return "images";
    }
    return "?";
}

inline FeatureFormat feature_format_from_string(const std::string& s)
{
    if (s == "csv")
        return FeatureFormat::csv;
    if (s == "binary")
        return FeatureFormat::binary;
    if (s == "images")
        return FeatureFormat::images;
    throw ConfigError("unknown feature format '" + s + "'");
}

namespace detail {

inline std::string part_name(std::size_t part, FeatureFormat f)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "features/part-%05zu.%s", part, f == FeatureFormat::csv ? "csv" : "bin");
    return buf;
}

inline std::string image_name(std::size_t id)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "images/%08zu.pfm", id);
    return buf;
}

inline void append_float(std::string& out, float v)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

inline std::uint8_t degenerate_bits(const CompactIntensity& iv)
{
    std::uint8_t bits = 0;
    for (int c = 0; c < 3; ++c)
        if (std::all_of(iv.channel(c).begin(), iv.channel(c).end(), [](float v) { return v == 0.0f; }))
            bits |= static_cast<std::uint8_t>(1u << c);
    return bits;
}

/// PFM: "PF\n<w> <h>\n-1.0\n", then float32 little-endian RGB rows bottom to top.
inline std::vector<std::uint8_t> encode_pfm(const ShadowImage& im)
{
    const std::string head = "PF\n" + std::to_string(im.width) + " " + std::to_string(im.height) + "\n-1.0\n";
    ByteWriter w;
    w.put_bytes(head.data(), head.size());
    for (int row = im.height - 1; row >= 0; --row)
        for (int col = 0; col < im.width; ++col)
            for (int ch = 0; ch < 3; ++ch)
                w.put<float>(im.at(row, col, ch));
    return std::move(w.bytes());
}

inline ShadowImage decode_pfm(const std::vector<std::uint8_t>& bytes, const std::string& name)
{
    std::size_t pos = 0;
    auto token = [&] {
        while (pos < bytes.size() && std::isspace(bytes[pos]))
            ++pos;
        std::string t;
        while (pos < bytes.size() && !std::isspace(bytes[pos]))
            t.push_back(static_cast<char>(bytes[pos++]));
        return t;
    };
    if (token() != "PF")
        throw FormatError(name + ": not a colour PFM file");
    int w = 0, h = 0;
    double scale = 0.0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        scale = std::stod(token());
    } catch (const std::exception&) {
        throw FormatError(name + ": malformed PFM header");
    }
    if (w <= 0 || h <= 0 || !(scale < 0.0))
        throw FormatError(name + ": unsupported PFM header (need positive size, little-endian scale)");
    ++pos;  // single whitespace byte after the scale
    ByteReader r(bytes.data() + pos, bytes.size() - std::min(pos, bytes.size()), name);
    ShadowImage im(w, h);
    for (int row = h - 1; row >= 0; --row)
        for (int col = 0; col < w; ++col)
            for (int ch = 0; ch < 3; ++ch)
                im.at(row, col, ch) = r.get<float>();
    return im;
}

inline nlohmann::json snapshot_json(const Dataset& ds)
{
    return {{"format", "astras-config-snapshot"},
            {"format_version", kDatasetFormatVersion},
            {"seed", ds.seed},
            {"n_samples", ds.size()},
            {"geometry", ds.geometry},
            {"imperfections", ds.imperfections},
            {"schedule", ds.schedule}};
}

inline void check_version(const nlohmann::json& j, const std::string& what)
{
    const unsigned found = j.value("format_version", 0u);
    if (found != kDatasetFormatVersion)
        throw VersionError(what + ": format version " + std::to_string(found) + ", this build reads version "
                               + std::to_string(kDatasetFormatVersion),
                           found, kDatasetFormatVersion);
}

} // namespace detail

/// Writes `ds` into `dir` (created if needed). Every file is written
/// atomically and the manifest last.
inline std::filesystem::path write_dataset(const Dataset& ds, const std::filesystem::path& dir,
                                           FeatureFormat format = FeatureFormat::binary)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const std::size_t n = ds.size();
    if (format == FeatureFormat::images) {
        fs::create_directories(dir / "images");
        for (std::size_t i = 0; i < n; ++i) {
            if (!ds.samples[i].image)
                throw InputError("write_dataset: sample " + std::to_string(i) + " has no image");
            atomic_write(dir / detail::image_name(i), detail::encode_pfm(*ds.samples[i].image));
        }
    } else {
        fs::create_directories(dir / "features");
        for (std::size_t part = 0; part * kSamplesPerPart < n; ++part) {
            const std::size_t lo = part * kSamplesPerPart, hi = std::min(n, lo + kSamplesPerPart);
            if (format == FeatureFormat::csv) {
                std::string text;
                for (std::size_t i = lo; i < hi; ++i) {
                    text += std::to_string(i);
                    for (int c = 0; c < 3; ++c)
                        for (float v : ds.samples[i].intensity.channel(c)) {
                            text += ',';
                            detail::append_float(text, v);
                        }
                    text += '\n';
                }
                atomic_write(dir / detail::part_name(part, format), text);
            } else {
                ByteWriter w;
                w.put_bytes(kFeatureMagic, 8);
                w.put<std::uint32_t>(kDatasetFormatVersion);
                const auto K = ds.samples[lo].intensity.size();
                w.put<std::uint32_t>(static_cast<std::uint32_t>(K));
                w.put<std::uint64_t>(hi - lo);
                for (std::size_t i = lo; i < hi; ++i) {
                    const auto& iv = ds.samples[i].intensity;
                    if (iv.size() != K)
                        throw InputError("write_dataset: samples differ in sensor width");
                    w.put<std::uint64_t>(i);
                    for (int c = 0; c < 3; ++c)
                        for (float v : iv.channel(c))
                            w.put<float>(v);
                }
                atomic_write(dir / detail::part_name(part, format), w.bytes());
            }
        }
    }
    atomic_write(dir / "config.snapshot", detail::snapshot_json(ds).dump(2) + "\n");

    std::string manifest;
    const std::size_t K = n ? ds.samples.front().intensity.size() : 0;
    manifest += nlohmann::json{{"format", "astras-dataset"},
                               {"format_version", kDatasetFormatVersion},
                               {"n_samples", n},
                               {"sensor_width", K},
                               {"feature_format", to_string(format)}}
                    .dump()
        + "\n";
    for (std::size_t i = 0; i < n; ++i) {
        const Sample& s = ds.samples[i];
        nlohmann::json r{{"id", i},
                         {"beta_ref_deg", s.beta_ref_deg},
                         {"direction", to_string(s.direction)},
                         {"eccentricity_mm", s.eccentricity_mm},
                         {"sector_label", s.label ? nlohmann::json(*s.label) : nlohmann::json(nullptr)},
                         {"true_sector", s.true_sector},
                         {"timestamp", s.timestamp}};
        if (format == FeatureFormat::images)
            r["image_file"] = detail::image_name(i);
        else
            r["feature_file"] = detail::part_name(i / kSamplesPerPart, format);
        manifest += r.dump() + "\n";
    }
    const auto path = dir / "manifest.jsonl";
    atomic_write(path, manifest);
    return path;
}

namespace detail {

using FeatureTable = std::map<std::size_t, CompactIntensity>;

inline void load_csv_part(const std::filesystem::path& file, std::size_t K, FeatureTable& out)
{
    const auto bytes = read_file(file);
    const char* p = reinterpret_cast<const char*>(bytes.data());
    const char* end = p + bytes.size();
    std::size_t line = 0;
    while (p < end) {
        ++line;
        const char* eol = std::find(p, end, '\n');
        std::size_t id = 0;
        auto r = std::from_chars(p, eol, id);
        if (r.ec != std::errc())
            throw FormatError(file.string() + ":" + std::to_string(line) + ": bad id");
        p = r.ptr;
        CompactIntensity iv;
        std::vector<float> vals;
        vals.reserve(3 * K);
        while (p < eol) {
            if (*p != ',')
                throw FormatError(file.string() + ":" + std::to_string(line) + ": expected ','");
            float v = 0.0f;
            r = std::from_chars(p + 1, eol, v);
            if (r.ec != std::errc())
                throw FormatError(file.string() + ":" + std::to_string(line) + ": bad number");
            vals.push_back(v);
            p = r.ptr;
        }
        if (vals.size() != 3 * K)
            throw FormatError(file.string() + ":" + std::to_string(line) + ": expected " + std::to_string(3 * K)
                              + " values, found " + std::to_string(vals.size()));
        for (int c = 0; c < 3; ++c)
            iv.channel(c).assign(vals.begin() + static_cast<std::ptrdiff_t>(c * K),
                                 vals.begin() + static_cast<std::ptrdiff_t>((c + 1) * K));
        iv.degenerate_channels = degenerate_bits(iv);
        out[id] = std::move(iv);
        p = eol + (eol < end ? 1 : 0);
    }
}

inline void load_binary_part(const std::filesystem::path& file, std::size_t K, FeatureTable& out)
{
    const auto bytes = read_file(file);
    ByteReader r(bytes.data(), bytes.size(), file.string());
    if (std::memcmp(r.take(8), kFeatureMagic, 8) != 0)
        throw FormatError(file.string() + ": bad magic");
    const auto ver = r.get<std::uint32_t>();
    if (ver != kDatasetFormatVersion)
        throw VersionError(file.string() + ": format version " + std::to_string(ver) + ", this build reads version "
                               + std::to_string(kDatasetFormatVersion),
                           ver, kDatasetFormatVersion);
    if (r.get<std::uint32_t>() != K)
        throw FormatError(file.string() + ": sensor width differs from the manifest");
    const auto count = r.get<std::uint64_t>();
    for (std::uint64_t j = 0; j < count; ++j) {
        const auto id = static_cast<std::size_t>(r.get<std::uint64_t>());
        CompactIntensity iv;
        for (int c = 0; c < 3; ++c) {
            auto& ch = iv.channel(c);
            ch.resize(K);
            for (auto& v : ch)
                v = r.get<float>();
        }
        iv.degenerate_channels = degenerate_bits(iv);
        out[id] = std::move(iv);
    }
    if (r.remaining() != 0)
        throw FormatError(file.string() + ": trailing bytes");
}

} // namespace detail

/// Reads a dataset directory. Missing or incomplete feature references are
/// reported together, one line per sample id.
inline Dataset read_dataset(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    const auto mpath = dir / "manifest.jsonl";
    std::ifstream in(mpath);
    if (!in)
        throw InputError("no manifest at " + mpath.string());
    std::string line;
    if (!std::getline(in, line))
        throw FormatError(mpath.string() + ": empty manifest");
    nlohmann::json head;
    try {
        head = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(mpath.string() + ": header: " + e.what());
    }
    if (head.value("format", "") != "astras-dataset")
        throw FormatError(mpath.string() + ": not an astras dataset manifest");
    detail::check_version(head, mpath.string());
    const auto format = feature_format_from_string(head.at("feature_format").get<std::string>());
    const auto n = head.at("n_samples").get<std::size_t>();
    const auto K = head.at("sensor_width").get<std::size_t>();

    Dataset ds;
    {
        const auto spath = dir / "config.snapshot";
        std::ifstream sin(spath);
        if (!sin)
            throw FormatError("missing " + spath.string());
        nlohmann::json snap;
        try {
            sin >> snap;
            detail::check_version(snap, spath.string());
            ds.geometry = snap.at("geometry").get<EncoderGeometry>();
            ds.imperfections = snap.at("imperfections").get<ImperfectionConfig>();
            ds.schedule = snap.at("schedule").get<Schedule>();
            ds.seed = snap.at("seed").get<std::uint64_t>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(spath.string() + ": " + e.what());
        }
    }

    std::vector<std::string> refs;
    ds.samples.reserve(n);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        try {
            const auto r = nlohmann::json::parse(line);
            const auto id = r.at("id").get<std::size_t>();
            if (id != ds.samples.size())
                throw FormatError(mpath.string() + ":" + std::to_string(lineno) + ": id " + std::to_string(id)
                                  + " out of sequence (expected " + std::to_string(ds.samples.size()) + ")");
            Sample s;
            s.beta_ref_deg = r.at("beta_ref_deg").get<double>();
            s.direction = direction_from_string(r.at("direction").get<std::string>());
            s.eccentricity_mm = r.value("eccentricity_mm", 0.0);
            if (r.contains("sector_label") && !r["sector_label"].is_null())
                s.label = r["sector_label"].get<int>();
            s.true_sector = r.value("true_sector", -1);
            s.timestamp = r.value("timestamp", std::uint64_t{id});
            refs.push_back(r.at(format == FeatureFormat::images ? "image_file" : "feature_file").get<std::string>());
            ds.samples.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(mpath.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (ds.samples.size() != n)
        throw FormatError(mpath.string() + ": header announces " + std::to_string(n) + " samples, found "
                          + std::to_string(ds.samples.size()));

    std::vector<std::string> dangling;
    if (format == FeatureFormat::images) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto p = dir / refs[i];
            if (!fs::exists(p)) {
                dangling.push_back("id " + std::to_string(i) + ": missing " + refs[i]);
                continue;
            }
            ds.samples[i].image = detail::decode_pfm(read_file(p), p.string());
            if (static_cast<std::size_t>(ds.samples[i].image->width) != K)
                throw FormatError(p.string() + ": width differs from the manifest");
            ds.samples[i].intensity = intensity_vectors(*ds.samples[i].image).cast<float>();
        }
    } else {
        std::map<std::string, detail::FeatureTable> parts;
        for (const auto& ref : std::set<std::string>(refs.begin(), refs.end())) {
            const auto p = dir / ref;
            if (!fs::exists(p))
                continue;
            auto& table = parts[ref];
            if (format == FeatureFormat::csv)
                detail::load_csv_part(p, K, table);
            else
                detail::load_binary_part(p, K, table);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto it = parts.find(refs[i]);
            if (it == parts.end()) {
                dangling.push_back("id " + std::to_string(i) + ": missing " + refs[i]);
                continue;
            }
            auto f = it->second.find(i);
            if (f == it->second.end()) {
                dangling.push_back("id " + std::to_string(i) + ": no row in " + refs[i]);
                continue;
            }
            ds.samples[i].intensity = std::move(f->second);
        }
    }
    if (!dangling.empty()) {
        std::string msg = "dataset " + dir.string() + " has " + std::to_string(dangling.size())
                          + " dangling feature reference(s):";
        for (const auto& d : dangling)
            msg += "\n  " + d;
        throw FormatError(msg);
    }
    return ds;
}

/// Rewrites only the sector_label field of every manifest record.
inline void update_labels(const std::filesystem::path& dir, const std::vector<int>& labels)
{
    const auto mpath = dir / "manifest.jsonl";
    std::ifstream in(mpath);
    if (!in)
        throw InputError("no manifest at " + mpath.string());
    std::string line, out;
    if (!std::getline(in, line))
        throw FormatError(mpath.string() + ": empty manifest");
    nlohmann::json head;
    try {
        head = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(mpath.string() + ": header: " + e.what());
    }
    detail::check_version(head, mpath.string());
    if (head.at("n_samples").get<std::size_t>() != labels.size())
        throw InputError("update_labels: " + std::to_string(labels.size()) + " labels for "
                         + std::to_string(head.at("n_samples").get<std::size_t>()) + " samples");
    out += line + "\n";
    std::size_t i = 0;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        if (i >= labels.size())
            throw FormatError(mpath.string() + ": more records than the header announces");
        nlohmann::json r;
        try {
            r = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(mpath.string() + ": record " + std::to_string(i) + ": " + e.what());
        }
        r["sector_label"] = labels[i++];
        out += r.dump() + "\n";
    }
    if (i != labels.size())
        throw FormatError(mpath.string() + ": fewer records than the header announces");
    atomic_write(mpath, out);
}

/// Regenerates the dataset described by a config.snapshot.
inline Dataset regenerate_from_snapshot(const std::filesystem::path& snapshot)
{
    std::ifstream in(snapshot);
    if (!in)
        throw InputError("cannot open " + snapshot.string());
    nlohmann::json j;
    in >> j;
    detail::check_version(j, snapshot.string());
    return generate_dataset(j.at("n_samples").get<std::size_t>(), j.at("geometry").get<EncoderGeometry>(),
                            j.at("imperfections").get<ImperfectionConfig>(), j.at("schedule").get<Schedule>(),
                            j.at("seed").get<std::uint64_t>());
}

} // namespace astras::io

#endif // ASTRAS_IO_DATASET_IO_HPP
