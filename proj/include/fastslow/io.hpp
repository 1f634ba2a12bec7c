#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fastslow/gradstruct.hpp"
#include "fastslow/network.hpp"

namespace fastslow {

// A parsed network document: state names in file order plus the assembled
// fast-slow network (diagonals recomputed by the constructor).
struct NetworkFile {
    std::vector<std::string> state_names;
    ReactionNetwork net;
};

// Experiment configuration. The document schema is strict: unknown keys are
// rejected, every field is validated with its own diagnostic.
struct ExperimentConfig {
    std::string network_path;  // as resolved against the config directory
    std::vector<double> eps_list{1e-1, 1e-2, 1e-3};
    std::optional<double> t_final;
    int steps = 200;
    Kind kind = Kind::Cosh;
    std::optional<Vector> tilt;
    double tol = 1e-8;
    std::string out_dir = ".";
    std::string snapshot;  // canonical dump of the parsed document
};

NetworkFile load_network(const std::string& path);

// Collects per-field diagnostics ("field: problem"); an empty list means the
// config parsed and validated, in which case *out (if given) is filled.
std::vector<std::string> validate_config(const std::string& path, ExperimentConfig* out);

// validate_config that throws a config error carrying all diagnostics.
ExperimentConfig load_config(const std::string& path);

// Deterministic serialization: 17 significant digits everywhere.
std::string csv_join(const std::vector<double>& values);
std::string matrix_text(const Matrix& m);
std::string matrix_text(const Eigen::MatrixXi& m);
void write_text_file(const std::filesystem::path& path, const std::string& content);

// Initial-state specifier: "uniform", "vertex:<i>" (1-based), or a path to a
// whitespace/comma-separated list of I nonnegative numbers summing to one.
Vector parse_initial(const std::string& spec, int num_states,
                     const std::filesystem::path& base_dir);

struct RunManifest {
    std::string subcommand;
    std::string library_version;
    std::string config_snapshot;
    std::vector<std::string> outputs;
    double wall_seconds = 0.0;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace fastslow
