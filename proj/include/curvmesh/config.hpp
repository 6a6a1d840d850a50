#pragma once

#include "curvmesh/assembly.hpp"
#include "curvmesh/eigensolver.hpp"
#include "curvmesh/errors.hpp"
#include "curvmesh/local_model.hpp"
#include "curvmesh/oracles.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace curvmesh {

inline std::string_view to_string(QuadratureMode q)
{
    switch (q) {
    case QuadratureMode::mixed: return "mixed";
    case QuadratureMode::vertex: return "vertex";
    case QuadratureMode::midpoint: return "midpoint";
    }
    return "unknown";
}

inline std::string_view to_string(FrameMode m)
{
    return m == FrameMode::full ? "full" : "reduced";
}

inline OperatorKind parse_operator(std::string_view s)
{
    if (s == "laplace_beltrami" || s == "lb") return OperatorKind::laplace_beltrami;
    if (s == "bochner") return OperatorKind::bochner;
    if (s == "hodge") return OperatorKind::hodge;
    fail(ErrorCode::invalid_argument, "unknown operator '" + std::string(s) + "'");
}

inline QuadratureMode parse_quadrature(std::string_view s)
{
    if (s == "mixed") return QuadratureMode::mixed;
    if (s == "vertex") return QuadratureMode::vertex;
    if (s == "midpoint") return QuadratureMode::midpoint;
    fail(ErrorCode::invalid_argument, "unknown quadrature mode '" + std::string(s) + "'");
}

inline FrameMode parse_frame_mode(std::string_view s)
{
    if (s == "reduced") return FrameMode::reduced;
    if (s == "full") return FrameMode::full;
    fail(ErrorCode::invalid_argument, "unknown frame mode '" + std::string(s) + "'");
}

enum class Manifold { sphere, torus };

inline std::string_view to_string(Manifold m)
{
    return m == Manifold::sphere ? "sphere" : "torus";
}

inline Manifold parse_manifold(std::string_view s)
{
    if (s == "sphere") return Manifold::sphere;
    if (s == "torus") return Manifold::torus;
    fail(ErrorCode::invalid_argument, "unknown manifold '" + std::string(s) + "'");
}

/// Reads the flat configuration format: one `key = value` per line, `#`
/// comments, values written as JSON literals (numbers, "strings", true/false,
/// single-line [arrays]). Every such file is also valid TOML.
inline nlohmann::json parse_flat_config(std::istream& in, const std::string& name = "<config>")
{
    nlohmann::json out = nlohmann::json::object();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = name + ":" + std::to_string(line_no) + ": ";
        bool quoted = false;
        for (std::size_t p = 0; p < line.size(); ++p) {
            if (line[p] == '"' && (p == 0 || line[p - 1] != '\\')) quoted = !quoted;
            if (line[p] == '#' && !quoted) {
                line.resize(p);
                break;
            }
        }
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, ErrorCode::invalid_argument, where + "expected 'key = value'");
        std::string key = line.substr(first, eq - first);
        key.erase(key.find_last_not_of(" \t") + 1);
        require(!key.empty() && key.find_first_of(" \t\"") == std::string::npos, ErrorCode::invalid_argument,
                where + "malformed key '" + key + "'");
        require(!out.contains(key), ErrorCode::invalid_argument, where + "duplicate key '" + key + "'");
        const std::string value = line.substr(eq + 1);
        try {
            out[key] = nlohmann::json::parse(value);
        } catch (const nlohmann::json::exception&) {
            fail(ErrorCode::invalid_argument, where + "cannot parse value for '" + key + "'");
        }
    }
    return out;
}

/// Everything a benchmark run needs.
struct RunConfig
{
    std::string name = "run";
    Manifold manifold = Manifold::sphere;
    std::vector<double> noise{0.0}; // radial noise levels, sphere only
    std::vector<Eigen::Index> n_values{1000, 2000, 4000, 8000};
    int trials = 10;
    std::uint64_t seed = 1;
    std::vector<OperatorKind> operators{OperatorKind::bochner, OperatorKind::hodge};

    Eigen::Index k = 0; // 0: default policy
    QuadratureMode quadrature = QuadratureMode::mixed;
    FrameMode frame_mode = FrameMode::reduced;
    bool fitted_vector_frames = true;
    bool augment_candidates = true;
    bool shared_triangles_only = true;
    double max_skipped_fraction = 0.01;

    std::size_t num_eigenvalues = 48; // L for the eigenvalue error
    std::size_t num_fields = 6;       // L for the eigenvector error
    double tol = 1e-8;
    double sigma = -0.5;
    Eigen::Index block_size = 0;
    int max_iterations = 500;

    int fd_grid = 1024;
    int fd_m_max = 64;

    bool diagnostics = true;
    int threads = 1;
    std::string output_dir = "runs/out";

    LocalModelOptions model_options() const
    {
        LocalModelOptions o;
        o.k = k;
        o.augment_candidates = augment_candidates;
        o.shared_triangles_only = shared_triangles_only;
        o.fitted_vector_frames = fitted_vector_frames;
        return o;
    }

    AssemblyOptions assembly_options() const
    {
        AssemblyOptions o;
        o.quadrature = quadrature;
        o.frame_mode = frame_mode;
        o.max_skipped_fraction = max_skipped_fraction;
        return o;
    }

    EigenSolverOptions solver_options(std::uint64_t solver_seed) const
    {
        EigenSolverOptions o;
        o.tol = tol;
        o.sigma = sigma;
        o.block_size = block_size;
        o.max_iterations = max_iterations;
        o.seed = solver_seed;
        return o;
    }

    TorusFdOptions torus_options() const
    {
        TorusFdOptions o;
        o.grid = fd_grid;
        o.m_max = fd_m_max;
        return o;
    }

    void validate() const
    {
        require(!n_values.empty() && !noise.empty() && !operators.empty(), ErrorCode::invalid_argument,
                "list fields must be nonempty");
        require(trials >= 1, ErrorCode::invalid_argument, "trials must be at least 1");
        for (auto n : n_values) require(n >= 16, ErrorCode::invalid_argument, "every N must be at least 16");
        for (double e : noise) require(e >= 0.0, ErrorCode::invalid_argument, "noise levels must be nonnegative");
        require(manifold == Manifold::sphere || (noise.size() == 1 && noise[0] == 0.0), ErrorCode::invalid_argument,
                "radial noise applies to the sphere only");
        require(num_eigenvalues >= 1 && num_fields >= 1, ErrorCode::invalid_argument, "mode counts must be positive");
        require(tol > 0.0 && max_iterations >= 1, ErrorCode::invalid_argument, "bad solver settings");
        require(threads >= 0, ErrorCode::invalid_argument, "threads must be nonnegative");
    }

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["name"] = name;
        j["manifold"] = to_string(manifold);
        j["noise"] = noise;
        j["n"] = n_values;
        j["trials"] = trials;
        j["seed"] = seed;
        std::vector<std::string> ops;
        for (auto op : operators) ops.emplace_back(to_string(op));
        j["operators"] = ops;
        j["k"] = k;
        j["quadrature"] = to_string(quadrature);
        j["frame_mode"] = to_string(frame_mode);
        j["fitted_vector_frames"] = fitted_vector_frames;
        j["augment_candidates"] = augment_candidates;
        j["shared_triangles_only"] = shared_triangles_only;
        j["max_skipped_fraction"] = max_skipped_fraction;
        j["num_eigenvalues"] = num_eigenvalues;
        j["num_fields"] = num_fields;
        j["tol"] = tol;
        j["sigma"] = sigma;
        j["block_size"] = block_size;
        j["max_iterations"] = max_iterations;
        j["fd_grid"] = fd_grid;
        j["fd_m_max"] = fd_m_max;
        j["diagnostics"] = diagnostics;
        j["threads"] = threads;
        j["output_dir"] = output_dir;
        return j;
    }

    /// Applies the keys of `j` over the defaults; unknown keys are rejected.
    static RunConfig from_json(const nlohmann::json& j)
    {
        RunConfig c;
        try {
            for (const auto& [key, v] : j.items()) {
                if (key == "name") c.name = v.get<std::string>();
                else if (key == "manifold") c.manifold = parse_manifold(v.get<std::string>());
                else if (key == "noise") c.noise = v.is_array() ? v.get<std::vector<double>>() : std::vector{v.get<double>()};
                else if (key == "n") c.n_values = v.is_array() ? v.get<std::vector<Eigen::Index>>() : std::vector{v.get<Eigen::Index>()};
                else if (key == "trials") c.trials = v.get<int>();
                else if (key == "seed") c.seed = v.get<std::uint64_t>();
                else if (key == "operators" || key == "operator") {
                    c.operators.clear();
                    if (v.is_array()) for (const auto& s : v) c.operators.push_back(parse_operator(s.get<std::string>()));
                    else c.operators.push_back(parse_operator(v.get<std::string>()));
                }
                else if (key == "k") c.k = v.get<Eigen::Index>();
                else if (key == "quadrature") c.quadrature = parse_quadrature(v.get<std::string>());
                else if (key == "frame_mode") c.frame_mode = parse_frame_mode(v.get<std::string>());
                else if (key == "fitted_vector_frames") c.fitted_vector_frames = v.get<bool>();
                else if (key == "augment_candidates") c.augment_candidates = v.get<bool>();
                else if (key == "shared_triangles_only") c.shared_triangles_only = v.get<bool>();
                else if (key == "max_skipped_fraction") c.max_skipped_fraction = v.get<double>();
                else if (key == "num_eigenvalues") c.num_eigenvalues = v.get<std::size_t>();
                else if (key == "num_fields") c.num_fields = v.get<std::size_t>();
                else if (key == "tol") c.tol = v.get<double>();
                else if (key == "sigma") c.sigma = v.get<double>();
                else if (key == "block_size") c.block_size = v.get<Eigen::Index>();
                else if (key == "max_iterations") c.max_iterations = v.get<int>();
                else if (key == "fd_grid") c.fd_grid = v.get<int>();
                else if (key == "fd_m_max") c.fd_m_max = v.get<int>();
                else if (key == "diagnostics") c.diagnostics = v.get<bool>();
                else if (key == "threads") c.threads = v.get<int>();
                else if (key == "output_dir") c.output_dir = v.get<std::string>();
                else fail(ErrorCode::invalid_argument, "unknown configuration key '" + key + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::invalid_argument, std::string("configuration value has the wrong type: ") + e.what());
        }
        c.validate();
        return c;
    }
};

inline RunConfig read_run_config(const std::string& path)
{
    std::ifstream in(path);
    require(bool(in), ErrorCode::io, "cannot open '" + path + "'");
    return RunConfig::from_json(parse_flat_config(in, path));
}

/// 64-bit FNV-1a of the canonical JSON echo, as 16 hex digits.
inline std::string config_hash(const RunConfig& c)
{
    const std::string text = c.to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << h;
    return s.str();
}

} // namespace curvmesh
