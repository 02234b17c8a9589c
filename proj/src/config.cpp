#include "reread/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "reread/encoder.hpp"
#include "reread/error.hpp"

namespace reread {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

const std::vector<std::string>& TrainConfig::keys() {
    static const std::vector<std::string> k{"lr",         "batch_size", "warmup_fraction", "epochs_phase1",
                                            "epochs_phase2", "epochs_phase3", "k_percent", "alpha_full",
                                            "alpha_suff", "alpha_plau", "b_f",       "b_s",
                                            "seed",       "d",          "h",         "r",
                                            "n_buckets"};
    return k;
}

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw ConfigError("warmup_fraction must lie in [0, 1)");
    if (!(k_percent > 0.0 && k_percent <= 100.0)) throw ConfigError("k_percent must lie in (0, 100]");
    if (d < 1 || h < 1 || r < 1 || n_buckets < 1) throw ConfigError("d, h, r and n_buckets must be positive");
    weights.validate();
    margins.validate();
}

void TrainConfig::set(std::string_view key, std::string_view value) {
    value = trim(value);
    if (key == "lr") lr = parse_number<double>(key, value);
    else if (key == "batch_size") batch_size = parse_number<std::size_t>(key, value);
    else if (key == "warmup_fraction") warmup_fraction = parse_number<double>(key, value);
    else if (key == "epochs_phase1") epochs[0] = parse_number<std::size_t>(key, value);
    else if (key == "epochs_phase2") epochs[1] = parse_number<std::size_t>(key, value);
    else if (key == "epochs_phase3") epochs[2] = parse_number<std::size_t>(key, value);
    else if (key == "k_percent") k_percent = parse_number<double>(key, value);
    else if (key == "alpha_full") weights.alpha_full = parse_number<double>(key, value);
    else if (key == "alpha_suff") weights.alpha_suff = parse_number<double>(key, value);
    else if (key == "alpha_plau") weights.alpha_plau = parse_number<double>(key, value);
    else if (key == "b_f") margins.b_f = parse_number<double>(key, value);
    else if (key == "b_s") margins.b_s = parse_number<double>(key, value);
    else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
    else if (key == "d") d = parse_number<std::size_t>(key, value);
    else if (key == "h") h = parse_number<std::size_t>(key, value);
    else if (key == "r") r = parse_number<std::size_t>(key, value);
    else if (key == "n_buckets") n_buckets = parse_number<std::size_t>(key, value);
    else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string TrainConfig::to_text() const {
    std::ostringstream os;
    os << "lr=" << format_double(lr) << '\n'
       << "batch_size=" << batch_size << '\n'
       << "warmup_fraction=" << format_double(warmup_fraction) << '\n'
       << "epochs_phase1=" << epochs[0] << '\n'
       << "epochs_phase2=" << epochs[1] << '\n'
       << "epochs_phase3=" << epochs[2] << '\n'
       << "k_percent=" << format_double(k_percent) << '\n'
       << "alpha_full=" << format_double(weights.alpha_full) << '\n'
       << "alpha_suff=" << format_double(weights.alpha_suff) << '\n'
       << "alpha_plau=" << format_double(weights.alpha_plau) << '\n'
       << "b_f=" << format_double(margins.b_f) << '\n'
       << "b_s=" << format_double(margins.b_s) << '\n'
       << "seed=" << seed << '\n'
       << "d=" << d << '\n'
       << "h=" << h << '\n'
       << "r=" << r << '\n'
       << "n_buckets=" << n_buckets << '\n';
    return os.str();
}

std::uint64_t TrainConfig::hash() const { return fnv1a64(to_text()); }

TrainConfig TrainConfig::parse(std::string_view text) {
    TrainConfig cfg;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        if (const auto hash_pos = line.find('#'); hash_pos != std::string_view::npos) line = line.substr(0, hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        }
        try {
            cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void TrainConfig::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << to_text();
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace reread
