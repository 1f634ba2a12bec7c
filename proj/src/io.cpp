#include "fastslow/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "fastslow/errors.hpp"
#include "fastslow/version.hpp"
#include "json.hpp"

namespace fastslow {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int line_of_offset(const std::string& text, size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() +
                                                            static_cast<long>(offset),
                                           '\n'));
}

json parse_document(const std::string& path, std::vector<std::string>& diagnostics) {
    std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        diagnostics.push_back(path + ":" + std::to_string(line_of_offset(text, e.byte)) +
                              ": " + e.what());
        return json();
    }
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& known,
                         const std::string& where, std::vector<std::string>& diagnostics) {
    for (const auto& item : obj.items())
        if (std::find(known.begin(), known.end(), item.key()) == known.end())
            diagnostics.push_back(where + ": unknown key \"" + item.key() + "\"");
}

std::vector<std::string> validate_network_document(const std::string& path, NetworkFile* out) {
    std::vector<std::string> diagnostics;
    json doc = parse_document(path, diagnostics);
    if (!diagnostics.empty()) return diagnostics;
    if (!doc.is_object()) return {path + ": top level must be an object"};

    reject_unknown_keys(doc, {"states", "edges"}, path, diagnostics);

    std::vector<std::string> names;
    if (!doc.contains("states")) {
        diagnostics.push_back("states: missing required field");
    } else if (!doc["states"].is_array() || doc["states"].empty()) {
        diagnostics.push_back("states: must be a nonempty array of names");
    } else {
        for (const auto& s : doc["states"]) {
            if (!s.is_string() || s.get<std::string>().empty()) {
                diagnostics.push_back("states: entries must be nonempty strings");
                break;
            }
            names.push_back(s.get<std::string>());
        }
        std::vector<std::string> sorted = names;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            diagnostics.push_back("states: names must be unique");
    }

    const int I = static_cast<int>(names.size());
    Matrix slow = Matrix::Zero(I, I);
    Matrix fast = Matrix::Zero(I, I);
    bool edges_ok = true;
    if (!doc.contains("edges")) {
        diagnostics.push_back("edges: missing required field");
        edges_ok = false;
    } else if (!doc["edges"].is_array()) {
        diagnostics.push_back("edges: must be an array");
        edges_ok = false;
    } else if (I > 0) {
        int idx = 0;
        for (const auto& edge : doc["edges"]) {
            std::string where = "edges[" + std::to_string(idx++) + "]";
            if (!edge.is_object()) {
                diagnostics.push_back(where + ": must be an object");
                edges_ok = false;
                continue;
            }
            reject_unknown_keys(edge, {"from", "to", "rate", "speed"}, where, diagnostics);
            auto find_state = [&](const char* key) -> int {
                if (!edge.contains(key) || !edge[key].is_string()) {
                    diagnostics.push_back(where + "." + key + ": must name a state");
                    return -1;
                }
                auto it = std::find(names.begin(), names.end(), edge[key].get<std::string>());
                if (it == names.end()) {
                    diagnostics.push_back(where + "." + key + ": unknown state \"" +
                                          edge[key].get<std::string>() + "\"");
                    return -1;
                }
                return static_cast<int>(it - names.begin());
            };
            int from = find_state("from");
            int to = find_state("to");
            double rate = -1.0;
            if (!edge.contains("rate") || !edge["rate"].is_number() ||
                !(edge["rate"].get<double>() > 0.0)) {
                diagnostics.push_back(where + ".rate: must be a positive number");
            } else {
                rate = edge["rate"].get<double>();
            }
            int speed = -1;
            if (!edge.contains("speed") || !edge["speed"].is_string()) {
                diagnostics.push_back(where + ".speed: must be \"slow\" or \"fast\"");
            } else {
                std::string s = edge["speed"].get<std::string>();
                if (s == "slow")
                    speed = 0;
                else if (s == "fast")
                    speed = 1;
                else
                    diagnostics.push_back(where + ".speed: must be \"slow\" or \"fast\", got \"" +
                                          s + "\"");
            }
            if (from < 0 || to < 0 || rate <= 0.0 || speed < 0) {
                edges_ok = false;
                continue;
            }
            if (from == to) {
                diagnostics.push_back(where + ": from and to must differ");
                edges_ok = false;
                continue;
            }
            // Column convention: entry (to, from) is the rate from -> to.
            (speed == 0 ? slow : fast)(to, from) += rate;
        }
    }

    if (!diagnostics.empty()) return diagnostics;
    if (!edges_ok || I == 0) return diagnostics;

    try {
        ReactionNetwork net(I, slow, fast);
        if (out) {
            out->state_names = names;
            out->net = std::move(net);
        }
    } catch (const Error& e) {
        diagnostics.push_back(std::string("edges: ") + e.what());
    }
    return diagnostics;
}

}  // namespace

NetworkFile load_network(const std::string& path) {
    NetworkFile file{{}, ReactionNetwork(1, Matrix::Zero(1, 1), Matrix::Zero(1, 1))};
    auto diagnostics = validate_network_document(path, &file);
    if (!diagnostics.empty()) {
        std::string joined;
        for (const auto& d : diagnostics) joined += (joined.empty() ? "" : "; ") + d;
        throw Error(ErrorKind::ConfigError, joined);
    }
    return file;
}

std::vector<std::string> validate_config(const std::string& path, ExperimentConfig* out) {
    std::vector<std::string> diagnostics;
    json doc = parse_document(path, diagnostics);
    if (!diagnostics.empty()) return diagnostics;
    if (!doc.is_object()) return {path + ": top level must be an object"};

    reject_unknown_keys(
        doc, {"network", "eps_list", "t_final", "steps", "kind", "tilt", "tol", "out"}, path,
        diagnostics);

    ExperimentConfig cfg;
    cfg.snapshot = doc.dump(2);
    std::filesystem::path base = std::filesystem::path(path).parent_path();

    if (!doc.contains("network") || !doc["network"].is_string()) {
        diagnostics.push_back("network: missing required path to the network file");
    } else {
        std::filesystem::path p(doc["network"].get<std::string>());
        cfg.network_path = (p.is_absolute() ? p : base / p).string();
    }

    if (doc.contains("eps_list")) {
        if (!doc["eps_list"].is_array() || doc["eps_list"].empty()) {
            diagnostics.push_back("eps_list: must be a nonempty array of numbers");
        } else {
            std::vector<double> eps;
            bool ok = true;
            for (const auto& e : doc["eps_list"]) {
                if (!e.is_number() || !(e.get<double>() > 0.0)) {
                    diagnostics.push_back("eps_list: entries must be positive numbers");
                    ok = false;
                    break;
                }
                eps.push_back(e.get<double>());
            }
            for (size_t k = 0; ok && k + 1 < eps.size(); ++k)
                if (!(eps[k] > eps[k + 1])) {
                    diagnostics.push_back("eps_list: must be strictly decreasing");
                    break;
                }
            if (ok) cfg.eps_list = eps;
        }
    }

    if (doc.contains("t_final")) {
        if (!doc["t_final"].is_number() || !(doc["t_final"].get<double>() > 0.0))
            diagnostics.push_back("t_final: must be a positive number");
        else
            cfg.t_final = doc["t_final"].get<double>();
    }

    if (doc.contains("steps")) {
        if (!doc["steps"].is_number_integer() || doc["steps"].get<int>() < 2)
            diagnostics.push_back("steps: must be an integer >= 2");
        else
            cfg.steps = doc["steps"].get<int>();
    }

    if (doc.contains("kind")) {
        std::string k = doc["kind"].is_string() ? doc["kind"].get<std::string>() : "";
        if (k == "quad")
            cfg.kind = Kind::Quadratic;
        else if (k == "entropic")
            cfg.kind = Kind::EntropicQuadratic;
        else if (k == "cosh")
            cfg.kind = Kind::Cosh;
        else
            diagnostics.push_back("kind: must be one of quad|entropic|cosh");
    }

    if (doc.contains("tilt")) {
        if (!doc["tilt"].is_array() || doc["tilt"].empty()) {
            diagnostics.push_back("tilt: must be a nonempty array of numbers");
        } else {
            Vector eta(static_cast<long>(doc["tilt"].size()));
            bool ok = true;
            long i = 0;
            for (const auto& e : doc["tilt"]) {
                if (!e.is_number()) {
                    diagnostics.push_back("tilt: entries must be numbers");
                    ok = false;
                    break;
                }
                eta(i++) = e.get<double>();
            }
            if (ok) cfg.tilt = eta;
        }
    }

    if (doc.contains("tol")) {
        if (!doc["tol"].is_number() || !(doc["tol"].get<double>() > 0.0))
            diagnostics.push_back("tol: must be a positive number");
        else
            cfg.tol = doc["tol"].get<double>();
    }

    if (doc.contains("out")) {
        if (!doc["out"].is_string())
            diagnostics.push_back("out: must be a directory path");
        else {
            std::filesystem::path p(doc["out"].get<std::string>());
            cfg.out_dir = (p.is_absolute() ? p : base / p).string();
        }
    }

    if (diagnostics.empty() && out) *out = cfg;
    return diagnostics;
}

ExperimentConfig load_config(const std::string& path) {
    ExperimentConfig cfg;
    auto diagnostics = validate_config(path, &cfg);
    if (!diagnostics.empty()) {
        std::string joined;
        for (const auto& d : diagnostics) joined += (joined.empty() ? "" : "; ") + d;
        throw Error(ErrorKind::ConfigError, joined);
    }
    return cfg;
}

std::string csv_join(const std::vector<double>& values) {
    std::string row;
    for (size_t k = 0; k < values.size(); ++k) {
        if (k) row += ",";
        row += format_g17(values[k]);
    }
    return row;
}

std::string matrix_text(const Matrix& m) {
    std::string text;
    for (long i = 0; i < m.rows(); ++i) {
        for (long j = 0; j < m.cols(); ++j) {
            if (j) text += " ";
            text += format_g17(m(i, j));
        }
        text += "\n";
    }
    return text;
}

std::string matrix_text(const Eigen::MatrixXi& m) {
    std::string text;
    for (long i = 0; i < m.rows(); ++i) {
        for (long j = 0; j < m.cols(); ++j) {
            if (j) text += " ";
            text += std::to_string(m(i, j));
        }
        text += "\n";
    }
    return text;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(ErrorKind::ConfigError, "write failed for " + path.string());
}

Vector parse_initial(const std::string& spec, int num_states,
                     const std::filesystem::path& base_dir) {
    if (spec == "uniform")
        return Vector::Constant(num_states, 1.0 / static_cast<double>(num_states));
    if (spec.rfind("vertex:", 0) == 0) {
        int i = 0;
        try {
            i = std::stoi(spec.substr(7));
        } catch (const std::exception&) {
            throw Error(ErrorKind::ConfigError, "bad vertex index in \"" + spec + "\"");
        }
        if (i < 1 || i > num_states)
            throw Error(ErrorKind::ConfigError,
                        "vertex index " + std::to_string(i) + " outside 1.." +
                            std::to_string(num_states));
        Vector c = Vector::Zero(num_states);
        c(i - 1) = 1.0;
        return c;
    }
    std::filesystem::path p(spec);
    if (!p.is_absolute()) p = base_dir / p;
    std::string text = read_file(p.string());
    for (char& ch : text)
        if (ch == ',') ch = ' ';
    std::istringstream in(text);
    std::vector<double> vals;
    double x = 0.0;
    while (in >> x) vals.push_back(x);
    if (static_cast<int>(vals.size()) != num_states)
        throw Error(ErrorKind::ConfigError,
                    "initial state file has " + std::to_string(vals.size()) +
                        " entries, expected " + std::to_string(num_states));
    Vector c(num_states);
    for (int k = 0; k < num_states; ++k) {
        if (vals[static_cast<size_t>(k)] < 0.0)
            throw Error(ErrorKind::ConfigError, "initial state entries must be nonnegative");
        c(k) = vals[static_cast<size_t>(k)];
    }
    if (std::abs(c.sum() - 1.0) > 1e-6)
        throw Error(ErrorKind::ConfigError,
                    "initial state mass is " + format_g17(c.sum()) + ", expected 1");
    return c / c.sum();
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    json doc;
    doc["subcommand"] = manifest.subcommand;
    doc["library_version"] = manifest.library_version;
    doc["config"] = json::parse(manifest.config_snapshot.empty() ? std::string("null")
                                                                 : manifest.config_snapshot);
    doc["outputs"] = manifest.outputs;
    doc["wall_seconds"] = manifest.wall_seconds;
    write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace fastslow
