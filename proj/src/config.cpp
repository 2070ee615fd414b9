#include "topoforge/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "topoforge/io.hpp"
#include "topoforge/rng.hpp"

namespace topoforge {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw ConfigError("bad value '" + value + "' for key '" + key + "'");
}

long long parse_int(const std::string& key, const std::string& value) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value);
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value);
    return v;
}

double parse_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end != value.c_str() + value.size() || value.empty()) bad_value(key, value);
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    bad_value(key, value);
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    std::vector<int> out;
    std::string tok;
    while (in >> tok) out.push_back(static_cast<int>(parse_int(key, tok)));
    if (out.empty()) bad_value(key, value);
    return out;
}

std::string join_ints(const int* v, std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + std::to_string(v[i]);
    return s;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Binding {
    const char* section;
    const char* key;
    Setter set;
    Getter get;
};

Binding bind_int(const char* sec, const char* key, int ExperimentConfig::* field) {
    return {sec, key,
            [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.*field = static_cast<int>(parse_int(k, v));
            },
            [field](const ExperimentConfig& c) { return std::to_string(c.*field); }};
}

template <typename Obj>
Binding bind_double(const char* sec, const char* key, Obj ExperimentConfig::* obj,
                    double Obj::* field) {
    return {sec, key,
            [obj, field](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.*obj.*field = parse_double(k, v);
            },
            [obj, field](const ExperimentConfig& c) { return format_double(c.*obj.*field); }};
}

template <typename Obj>
Binding bind_int(const char* sec, const char* key, Obj ExperimentConfig::* obj,
                 int Obj::* field) {
    return {sec, key,
            [obj, field](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.*obj.*field = static_cast<int>(parse_int(k, v));
            },
            [obj, field](const ExperimentConfig& c) { return std::to_string(c.*obj.*field); }};
}

Binding bind_double(const char* sec, const char* key, double ExperimentConfig::* field) {
    return {sec, key,
            [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.*field = parse_double(k, v);
            },
            [field](const ExperimentConfig& c) { return format_double(c.*field); }};
}

const std::vector<Binding>& schema() {
    static const std::vector<Binding> bindings = [] {
        std::vector<Binding> b;
        b.push_back(bind_int("mesh", "nx", &ExperimentConfig::nx));
        b.push_back(bind_int("mesh", "ny", &ExperimentConfig::ny));

        b.push_back(bind_double("material", "e0", &ExperimentConfig::material, &Material::e0));
        b.push_back(
            bind_double("material", "e_min", &ExperimentConfig::material, &Material::e_min));
        b.push_back(bind_double("material", "nu", &ExperimentConfig::material, &Material::nu));
        b.push_back(bind_double("material", "penal", &ExperimentConfig::material, &Material::q));

        b.push_back(bind_double("chain", "alpha", &ExperimentConfig::alpha));
        b.push_back(bind_double("chain", "filter_radius", &ExperimentConfig::filter_radius));
        b.push_back(bind_double("chain", "local_radius", &ExperimentConfig::local_radius));
        b.push_back(bind_double("chain", "p", &ExperimentConfig::p));
        b.push_back(bind_double("chain", "beta_target", &ExperimentConfig::beta_target));

        b.push_back(bind_double("solver", "eps_al", &ExperimentConfig::solver, &ALParams::eps_al));
        b.push_back(bind_double("solver", "eps", &ExperimentConfig::solver, &ALParams::eps));
        b.push_back(
            bind_double("solver", "eps_opt", &ExperimentConfig::solver, &ALParams::eps_opt));
        b.push_back(bind_double("solver", "r0", &ExperimentConfig::solver, &ALParams::r0));
        b.push_back(bind_double("solver", "r1", &ExperimentConfig::solver, &ALParams::r1));
        b.push_back(bind_double("solver", "mu0", &ExperimentConfig::solver, &ALParams::mu0));
        b.push_back(bind_double("solver", "mu1", &ExperimentConfig::solver, &ALParams::mu1));
        b.push_back(bind_double("solver", "eta0", &ExperimentConfig::solver, &ALParams::eta0));
        b.push_back(bind_double("solver", "eta1", &ExperimentConfig::solver, &ALParams::eta1));
        b.push_back(bind_double("solver", "learning_rate", &ExperimentConfig::solver,
                                &ALParams::learning_rate));
        b.push_back(
            bind_double("solver", "step_clip", &ExperimentConfig::solver, &ALParams::step_clip));
        b.push_back(bind_double("solver", "beta0", &ExperimentConfig::solver, &ALParams::beta0));
        b.push_back(bind_int("solver", "max_halvings", &ExperimentConfig::solver,
                             &ALParams::max_halvings));
        b.push_back(bind_int("solver", "max_descent_iterations", &ExperimentConfig::solver,
                             &ALParams::max_descent_iterations));
        b.push_back(bind_int("solver", "max_al_iterations", &ExperimentConfig::solver,
                             &ALParams::max_al_iterations));

        b.push_back(bind_double("kkt", "w0", &ExperimentConfig::kkt, &KKTParams::w0));
        b.push_back(bind_double("kkt", "w1", &ExperimentConfig::kkt, &KKTParams::w1));
        b.push_back(
            bind_double("kkt", "activity_tol", &ExperimentConfig::kkt, &KKTParams::activity_tol));
        b.push_back({"kkt", "positive_part_penalty",
                     [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                         c.kkt.positive_part_penalty = parse_bool(k, v);
                     },
                     [](const ExperimentConfig& c) {
                         return c.kkt.positive_part_penalty ? "true" : "false";
                     }});

        b.push_back({"generator", "hidden",
                     [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                         c.hidden = parse_int_list(k, v);
                     },
                     [](const ExperimentConfig& c) {
                         return join_ints(c.hidden.data(), c.hidden.size());
                     }});
        b.push_back({"generator", "optimizer",
                     [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                         if (v == "adam")
                             c.trainer.optimizer = Optimizer::Adam;
                         else if (v == "sgd")
                             c.trainer.optimizer = Optimizer::Sgd;
                         else
                             bad_value(k, v);
                     },
                     [](const ExperimentConfig& c) {
                         return c.trainer.optimizer == Optimizer::Adam ? "adam" : "sgd";
                     }});
        b.push_back(bind_double("generator", "learning_rate", &ExperimentConfig::trainer,
                                &TrainConfig::learning_rate));
        b.push_back(bind_double("generator", "lr_decay", &ExperimentConfig::trainer,
                                &TrainConfig::lr_decay));
        b.push_back(bind_int("generator", "batch_size", &ExperimentConfig::trainer,
                             &TrainConfig::batch_size));
        b.push_back(bind_int("generator", "full_batch_below", &ExperimentConfig::trainer,
                             &TrainConfig::full_batch_below));
        b.push_back(
            bind_int("generator", "epochs", &ExperimentConfig::trainer, &TrainConfig::epochs));
        b.push_back(bind_double("generator", "loss_tol", &ExperimentConfig::trainer,
                                &TrainConfig::loss_tol));

        b.push_back({"experiment", "case",
                     [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                         const long long n = parse_int(k, v);
                         if (n != 1 && n != 2) bad_value(k, v);
                         c.case_kind = n == 1 ? CaseKind::TipAngle : CaseKind::RegionAngle;
                     },
                     [](const ExperimentConfig& c) {
                         return std::to_string(static_cast<int>(c.case_kind));
                     }});
        b.push_back({"experiment", "load_region",
                     [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                         if (v == "default") {
                             for (int& r : c.load_region) r = -1;
                             return;
                         }
                         const std::vector<int> r = parse_int_list(k, v);
                         if (r.size() != 4) bad_value(k, v);
                         for (int i = 0; i < 4; ++i) c.load_region[i] = r[i];
                     },
                     [](const ExperimentConfig& c) -> std::string {
                         for (int r : c.load_region)
                             if (r < 0) return "default";
                         return join_ints(c.load_region, 4);
                     }});
        b.push_back(bind_int("experiment", "n_initial", &ExperimentConfig::n_initial));
        b.push_back(bind_int("experiment", "n_validation", &ExperimentConfig::n_validation));
        b.push_back(bind_int("experiment", "n_test", &ExperimentConfig::n_test));
        b.push_back(bind_int("experiment", "n_static", &ExperimentConfig::n_static));
        b.push_back(bind_int("experiment", "validation_subsample",
                             &ExperimentConfig::validation_subsample));
        b.push_back({"experiment", "strategy",
                     [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                         try {
                             c.strategy = strategy_from_string(v);
                         } catch (const std::exception&) {
                             bad_value(k, v);
                         }
                     },
                     [](const ExperimentConfig& c) { return to_string(c.strategy); }});
        b.push_back({"experiment", "weighted_loss",
                     [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                         c.weighted_loss = parse_bool(k, v);
                     },
                     [](const ExperimentConfig& c) {
                         return std::string(c.weighted_loss ? "true" : "false");
                     }});
        b.push_back(bind_int("experiment", "surrogate_degree", &ExperimentConfig::surrogate_degree));
        b.push_back({"experiment", "charge_scoring",
                     [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                         c.charge_scoring = parse_bool(k, v);
                     },
                     [](const ExperimentConfig& c) {
                         return std::string(c.charge_scoring ? "true" : "false");
                     }});
        b.push_back({"experiment", "seed",
                     [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                         c.seed = parse_u64(k, v);
                     },
                     [](const ExperimentConfig& c) { return std::to_string(c.seed); }});
        b.push_back(bind_int("experiment", "seeds", &ExperimentConfig::seeds));
        b.push_back({"experiment", "cache_dir",
                     [](ExperimentConfig& c, const std::string&, const std::string& v) {
                         c.cache_dir = v;
                     },
                     [](const ExperimentConfig& c) { return c.cache_dir; }});
        return b;
    }();
    return bindings;
}

}  // namespace

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::Static: return "static";
        case Strategy::Heuristic: return "heuristic";
        case Strategy::Theory: return "theory";
    }
    throw std::logic_error("unreachable strategy");
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "static") return Strategy::Static;
    if (name == "heuristic") return Strategy::Heuristic;
    if (name == "theory") return Strategy::Theory;
    throw ConfigError("unknown strategy '" + name + "'");
}

LoadRegion ExperimentConfig::region(const Mesh& mesh) const {
    for (int r : load_region)
        if (r < 0) return default_load_region(mesh);
    LoadRegion r{load_region[0], load_region[1], load_region[2], load_region[3]};
    if (r.x0 > r.x1 || r.y0 > r.y1 || r.x1 > mesh.nx() || r.y1 > mesh.ny())
        throw ConfigError("load_region outside mesh");
    return r;
}

void ExperimentConfig::validate() const {
    if (nx < 1 || ny < 1) throw ConfigError("mesh dimensions must be positive");
    material.validate();
    if (alpha <= 0.0 || alpha >= 1.0) throw ConfigError("alpha must lie in (0,1)");
    if (filter_radius <= 0.0 || local_radius <= 0.0) throw ConfigError("radii must be positive");
    if (p < 1.0) throw ConfigError("p must be at least 1");
    if (beta_target < 1.0) throw ConfigError("beta_target must be at least 1");
    solver.validate();
    if (kkt.w0 < 0.0 || kkt.w1 < 0.0) throw ConfigError("kkt weights must be nonnegative");
    if (kkt.activity_tol <= 0.0) throw ConfigError("activity_tol must be positive");
    for (int h : hidden)
        if (h <= 0) throw ConfigError("hidden widths must be positive");
    if (hidden.empty()) throw ConfigError("need at least one hidden layer");
    trainer.validate();
    if (n_initial < 1 || n_validation < 1 || n_test < 1 || n_static < 1)
        throw ConfigError("sample sizes must be positive");
    if (validation_subsample < 0) throw ConfigError("validation_subsample must be nonnegative");
    if (surrogate_degree < 0) throw ConfigError("surrogate_degree must be nonnegative");
    if (seeds < 1) throw ConfigError("seeds must be positive");
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig config;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        bool matched = false;
        for (const Binding& binding : schema()) {
            if (section == binding.section && key == binding.key) {
                binding.set(config, key, value);
                matched = true;
                break;
            }
        }
        if (!matched)
            throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& config) {
    std::string out;
    std::string section;
    for (const Binding& binding : schema()) {
        if (section != binding.section) {
            section = binding.section;
            if (!out.empty()) out += "\n";
            out += "[" + section + "]\n";
        }
        out += std::string(binding.key) + " = " + binding.get(config) + "\n";
    }
    return out;
}

std::uint64_t solver_scope_hash(const ExperimentConfig& config) {
    std::string scoped;
    for (const Binding& binding : schema()) {
        const std::string section = binding.section;
        const bool ground_truth_field =
            section == "mesh" || section == "material" || section == "chain" ||
            section == "solver" ||
            (section == "experiment" &&
             (std::string(binding.key) == "case" || std::string(binding.key) == "load_region"));
        if (ground_truth_field)
            scoped += section + "." + binding.key + "=" + binding.get(config) + "\n";
    }
    return fnv1a64(scoped);
}

}  // namespace topoforge
