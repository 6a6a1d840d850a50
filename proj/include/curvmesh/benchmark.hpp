#pragma once

#include "curvmesh/assembly.hpp"
#include "curvmesh/config.hpp"
#include "curvmesh/eigensolver.hpp"
#include "curvmesh/io.hpp"
#include "curvmesh/local_model.hpp"
#include "curvmesh/metrics.hpp"
#include "curvmesh/oracles.hpp"
#include "curvmesh/sampling.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace curvmesh {

inline constexpr const char* library_version = "0.1.0";

/// Outcome of one operator solved on one cloud.
struct OperatorOutcome
{
    OperatorKind op = OperatorKind::bochner;
    std::string status = "ok"; // "ok" or an error code name
    std::string message;
    std::uint64_t solver_seed = 0;
    double eigenvalue_error = std::numeric_limits<double>::quiet_NaN();
    double eigenvector_error = std::numeric_limits<double>::quiet_NaN();
    std::string eigenvector_status; // empty when not computed
    Eigen::VectorXd eigenvalues;
    AssemblyStats assembly;
    SolverStats solver;
    std::optional<PencilDiagnostics> diagnostics;
    double assemble_seconds = 0.0;
    double solve_seconds = 0.0;

    bool ok() const { return status == "ok"; }
};

/// One (noise level, N, trial) cell of a sweep.
struct CellResult
{
    double eta = 0.0;
    Eigen::Index n = 0;
    int trial = 0;
    std::uint64_t cloud_seed = 0;
    std::uint64_t noise_seed = 0;
    std::string status = "ok"; // failure before any operator ran
    std::string message;
    LocalModelStats model_stats;
    double sample_seconds = 0.0;
    double model_seconds = 0.0;
    std::vector<OperatorOutcome> outcomes;
};

/// Reference data shared by every cell of a run.
struct BenchmarkTruth
{
    std::map<OperatorKind, AnalyticSpectrum> spectra; // absent: no reference
    std::map<OperatorKind, std::vector<AnalyticEigenfieldSet>> fields;
    std::map<OperatorKind, AnalyticSpectrum> field_levels;
    std::map<OperatorKind, std::size_t> kernel_size;
};

struct SeriesSummary
{
    OperatorKind op = OperatorKind::bochner;
    double eta = 0.0;
    std::string metric; // "eigenvalue" or "eigenvector"
    std::vector<Eigen::Index> ns;
    std::vector<double> mean, stderr_;
    std::vector<int> ok, failed;
    std::optional<ConvergenceReport> rate; // needs 3 distinct N with valid means
    bool decreasing = false;               // within one stderr, one inversion allowed
    bool last_step_decreases = false;      // false when either of the two largest N has no estimate
};

struct BenchmarkResult
{
    RunConfig config;
    std::string config_hash;
    std::vector<CellResult> cells;
    std::vector<SeriesSummary> series;
    double truth_seconds = 0.0;
    double total_seconds = 0.0;

    const SeriesSummary* find_series(OperatorKind op, double eta, const std::string& metric) const
    {
        for (const auto& s : series)
            if (s.op == op && s.eta == eta && s.metric == metric) return &s;
        return nullptr;
    }
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t salt)
{
    std::uint64_t x = base;
    for (std::uint64_t v : {a, b, salt}) {
        x ^= v + 0x9E3779B97F4A7C15ull + (x << 6) + (x >> 2);
        x += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        x = z ^ (z >> 31);
    }
    return x;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Distinct sphere levels needed to expose `modes` nontrivial modes.
inline int sphere_levels_for(OperatorKind op, std::size_t modes)
{
    int levels = 1;
    std::size_t total = 0;
    for (;; ++levels) {
        total += static_cast<std::size_t>(op == OperatorKind::laplace_beltrami ? 2 * levels + 1 : 2 * (2 * levels + 1));
        if (total >= modes) return levels;
    }
}

inline std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline nlohmann::json json_number(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

} // namespace detail

/// Seeds are functions of (base seed, N, trial) only, so a cell reproduces
/// independently of the sweep it belongs to. Noise draws use their own seed.
inline std::uint64_t cell_cloud_seed(std::uint64_t base, Eigen::Index n, int trial)
{
    return detail::mix_seed(base, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(trial), 0);
}

inline std::uint64_t cell_noise_seed(std::uint64_t base, Eigen::Index n, int trial)
{
    return detail::mix_seed(base, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(trial), 1);
}

inline BenchmarkTruth build_truth(const RunConfig& c)
{
    BenchmarkTruth t;
    for (auto op : c.operators) {
        if (c.manifold == Manifold::sphere) {
            if (op == OperatorKind::laplace_beltrami) {
                t.spectra[op] = sphere_lb_spectrum(detail::sphere_levels_for(op, c.num_eigenvalues) + 1);
                t.kernel_size[op] = 1;
                continue;
            }
            t.spectra[op] = sphere_spectrum(op, detail::sphere_levels_for(op, c.num_eigenvalues));
            t.kernel_size[op] = 0;
            const int field_levels = detail::sphere_levels_for(op, c.num_fields);
            if (field_levels <= 3) {
                for (int l = 1; l <= field_levels; ++l) t.fields[op].push_back(sphere_eigenfields(l, op));
                t.field_levels[op] = sphere_spectrum(op, std::max(field_levels + 1, 2));
            }
        } else {
            if (op == OperatorKind::hodge) {
                t.spectra[op] = torus_hodge_spectrum_fd(c.num_eigenvalues, c.torus_options());
                t.kernel_size[op] = 2;
            } else if (op == OperatorKind::laplace_beltrami) {
                t.spectra[op] = torus_lb_spectrum_fd(c.num_eigenvalues + 1, c.torus_options());
                t.kernel_size[op] = 1;
            } else {
                t.kernel_size[op] = 0;
            }
        }
    }
    return t;
}

/// Samples, builds the local model, and solves every configured operator for
/// one cell. Failures are recorded in the result, never thrown.
inline CellResult run_cell(const RunConfig& c, const BenchmarkTruth& truth, double eta, Eigen::Index n, int trial)
{
    CellResult cell;
    cell.eta = eta;
    cell.n = n;
    cell.trial = trial;
    cell.cloud_seed = cell_cloud_seed(c.seed, n, trial);
    cell.noise_seed = cell_noise_seed(c.seed, n, trial);

    PointCloud cloud;
    LocalModel model;
    try {
        auto t0 = std::chrono::steady_clock::now();
        cloud = c.manifold == Manifold::sphere ? sample_sphere(n, cell.cloud_seed) : sample_torus(n, cell.cloud_seed);
        if (eta > 0.0) cloud = add_radial_noise(cloud, eta, cell.noise_seed);
        cell.sample_seconds = detail::seconds_since(t0);
        t0 = std::chrono::steady_clock::now();
        model = build_local_model(cloud, c.model_options());
        cell.model_stats = model.stats;
        cell.model_seconds = detail::seconds_since(t0);
    } catch (const Error& e) {
        cell.status = std::string(to_string(e.code()));
        cell.message = e.what();
        return cell;
    }

    const AssemblyOptions aopt = c.assembly_options();
    std::optional<SparseMatrix> vector_mass;
    AssemblyStats mass_stats;
    for (std::size_t o = 0; o < c.operators.size(); ++o) {
        OperatorOutcome out;
        out.op = c.operators[o];
        out.solver_seed = detail::mix_seed(cell.cloud_seed, static_cast<std::uint64_t>(out.op), 0, 2);
        try {
            auto t0 = std::chrono::steady_clock::now();
            OperatorPencil pencil;
            if (out.op == OperatorKind::laplace_beltrami) {
                pencil = assemble_laplace_beltrami(model, aopt);
            } else {
                if (!vector_mass) vector_mass = assemble_vector_mass(model, aopt, &mass_stats);
                pencil.op = out.op;
                pencil.dim = 2 * model.size();
                pencil.M_raw = *vector_mass;
                pencil.S_raw = out.op == OperatorKind::bochner ? assemble_bochner_stiffness(model, aopt, &pencil.stats)
                                                               : assemble_hodge_stiffness(model, aopt, &pencil.stats);
                pencil.stats.quadrature_points += mass_stats.quadrature_points;
                std::tie(pencil.A, pencil.B) = symmetrize(pencil.S_raw, pencil.M_raw);
            }
            out.assembly = pencil.stats;
            out.assemble_seconds = detail::seconds_since(t0);
            if (c.diagnostics) out.diagnostics = pencil_diagnostics(pencil.A, pencil.B);

            const std::size_t kernel = truth.kernel_size.count(out.op) ? truth.kernel_size.at(out.op) : 0;
            const auto wanted = static_cast<Eigen::Index>(std::min<std::size_t>(
                kernel + c.num_eigenvalues, static_cast<std::size_t>(pencil.dim)));
            t0 = std::chrono::steady_clock::now();
            const EigenResult r = solve_smallest(pencil.A, pencil.B, wanted, c.solver_options(out.solver_seed));
            out.solve_seconds = detail::seconds_since(t0);
            out.solver = r.solver_stats;
            out.eigenvalues = r.eigenvalues;

            if (auto it = truth.spectra.find(out.op); it != truth.spectra.end())
                out.eigenvalue_error = eigenvalue_error(r, it->second, c.num_eigenvalues);
            if (auto it = truth.fields.find(out.op); it != truth.fields.end()) {
                try {
                    out.eigenvector_error = eigenvector_error(r, it->second, cloud, model.vector_frames, c.num_fields,
                                                              truth.field_levels.at(out.op));
                    out.eigenvector_status = "ok";
                } catch (const Error& e) {
                    out.eigenvector_status = std::string(to_string(e.code()));
                }
            }
        } catch (const Error& e) {
            out.status = std::string(to_string(e.code()));
            out.message = e.what();
            out.eigenvalue_error = std::numeric_limits<double>::quiet_NaN();
        }
        cell.outcomes.push_back(std::move(out));
    }
    return cell;
}

namespace detail {

inline double mean_of(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double stderr_of(const std::vector<double>& v)
{
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

} // namespace detail

/// Per-(operator, noise, metric) error curves over N, in config order.
inline std::vector<SeriesSummary> summarize(const RunConfig& c, const std::vector<CellResult>& cells)
{
    std::vector<SeriesSummary> out;
    for (std::size_t o = 0; o < c.operators.size(); ++o)
        for (double eta : c.noise)
            for (const std::string metric : {"eigenvalue", "eigenvector"}) {
                SeriesSummary s;
                s.op = c.operators[o];
                s.eta = eta;
                s.metric = metric;
                bool any = false;
                std::vector<std::pair<double, double>> samples;
                for (auto n : c.n_values) {
                    std::vector<double> vals;
                    int failed = 0;
                    for (const auto& cell : cells) {
                        if (cell.eta != eta || cell.n != n) continue;
                        const OperatorOutcome* oc = o < cell.outcomes.size() ? &cell.outcomes[o] : nullptr;
                        const double v = !oc ? std::numeric_limits<double>::quiet_NaN()
                                             : metric == "eigenvalue" ? oc->eigenvalue_error : oc->eigenvector_error;
                        if (std::isfinite(v)) vals.push_back(v);
                        else ++failed;
                    }
                    any = any || !vals.empty();
                    s.ns.push_back(n);
                    s.ok.push_back(static_cast<int>(vals.size()));
                    s.failed.push_back(failed);
                    s.mean.push_back(vals.empty() ? std::numeric_limits<double>::quiet_NaN() : detail::mean_of(vals));
                    s.stderr_.push_back(vals.empty() ? std::numeric_limits<double>::quiet_NaN() : detail::stderr_of(vals));
                    for (double v : vals)
                        if (v > 0.0) samples.emplace_back(static_cast<double>(n), v);
                }
                if (!any) continue;

                std::vector<std::size_t> order(s.ns.size());
                for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
                std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.ns[a] < s.ns[b]; });
                ConvergenceReport valid;
                bool complete = true;
                for (auto j : order) {
                    if (!std::isfinite(s.mean[j]) || s.mean[j] <= 0.0) {
                        complete = false;
                        continue;
                    }
                    valid.Ns.push_back(static_cast<double>(s.ns[j]));
                    valid.errors.push_back(s.mean[j]);
                    valid.error_stderr.push_back(s.stderr_[j]);
                }
                if (valid.Ns.size() >= 3) {
                    try {
                        s.rate = fit_convergence_rate(samples);
                    } catch (const Error&) {
                    }
                }
                s.decreasing = complete && valid.Ns.size() >= 2 && decreasing_within_stderr(valid);
                if (order.size() >= 2) {
                    const auto a = order[order.size() - 2], b = order.back();
                    s.last_step_decreases = std::isfinite(s.mean[a]) && std::isfinite(s.mean[b]) && s.mean[b] < s.mean[a];
                }
                out.push_back(std::move(s));
            }
    return out;
}

/// Runs every (noise, N, trial) cell. Cells are independent; with more than
/// one thread they are handed out dynamically but stored by index, so the
/// result does not depend on the thread count.
inline BenchmarkResult run_benchmark(const RunConfig& c, std::ostream* log = nullptr)
{
    c.validate();
    const auto start = std::chrono::steady_clock::now();
    BenchmarkResult res;
    res.config = c;
    res.config_hash = config_hash(c);
    const BenchmarkTruth truth = build_truth(c);
    res.truth_seconds = detail::seconds_since(start);

    struct Task
    {
        double eta;
        Eigen::Index n;
        int trial;
    };
    std::vector<Task> tasks;
    for (double eta : c.noise)
        for (auto n : c.n_values)
            for (int t = 1; t <= c.trials; ++t) tasks.push_back({eta, n, t});
    res.cells.resize(tasks.size());

    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t j = next++; j < tasks.size(); j = next++) {
            res.cells[j] = run_cell(c, truth, tasks[j].eta, tasks[j].n, tasks[j].trial);
            if (log) {
                const std::lock_guard lock(log_mutex);
                const auto& cell = res.cells[j];
                *log << "eta=" << cell.eta << " N=" << cell.n << " trial=" << cell.trial;
                if (cell.status != "ok") *log << " " << cell.status;
                for (const auto& oc : cell.outcomes)
                    *log << " " << to_string(oc.op) << "=" << (oc.ok() ? detail::format_double(oc.eigenvalue_error) : oc.status);
                *log << std::endl;
            }
        }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const auto threads = static_cast<std::size_t>(c.threads == 0 ? hw : static_cast<unsigned>(c.threads));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(threads, tasks.size()); ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    res.series = summarize(c, res.cells);
    res.total_seconds = detail::seconds_since(start);
    return res;
}

inline nlohmann::json to_json(const LocalModelStats& s)
{
    return {{"k", s.k},
            {"empty_rings", s.empty_rings},
            {"degenerate_neighborhoods", s.degenerate_neighborhoods},
            {"failed_charts", s.failed_charts},
            {"dropped_triangles", s.dropped_triangles},
            {"ring_triangles", s.ring_triangles},
            {"augmented_points", s.augmented_points},
            {"unshared_triangles", s.unshared_triangles},
            {"unshared_rings_kept", s.unshared_rings_kept}};
}

inline nlohmann::json to_json(const AssemblyStats& s)
{
    return {{"ring_triangles", s.ring_triangles},
            {"skipped_triangles", s.skipped_triangles},
            {"skipped_fraction", s.skipped_fraction()},
            {"dropped_triangles", s.dropped_triangles},
            {"empty_rings", s.empty_rings},
            {"quadrature_points", s.quadrature_points}};
}

inline nlohmann::json to_json(const SolverStats& s)
{
    return {{"iterations", s.iterations},
            {"restarts", s.restarts},
            {"block_size", s.block_size},
            {"sigma", s.sigma},
            {"used_ldlt", s.used_ldlt}};
}

inline nlohmann::json to_json(const PencilDiagnostics& d)
{
    return {{"a_min_eig", detail::json_number(d.a_min_eig)},
            {"b_min_eig", detail::json_number(d.b_min_eig)},
            {"crawford_estimate", detail::json_number(d.crawford_estimate)},
            {"b_near_singular", d.b_near_singular},
            {"converged", d.converged}};
}

inline nlohmann::json to_json(const CellResult& cell, Manifold manifold)
{
    nlohmann::json j;
    j["manifold"] = to_string(manifold);
    j["eta"] = cell.eta;
    j["n"] = cell.n;
    j["trial"] = cell.trial;
    j["cloud_seed"] = cell.cloud_seed;
    j["noise_seed"] = cell.noise_seed;
    j["status"] = cell.status;
    if (!cell.message.empty()) j["message"] = cell.message;
    j["model_stats"] = to_json(cell.model_stats);
    j["timings"] = {{"sample_s", cell.sample_seconds}, {"model_s", cell.model_seconds}};
    j["operators"] = nlohmann::json::array();
    for (const auto& oc : cell.outcomes) {
        nlohmann::json o;
        o["operator"] = to_string(oc.op);
        o["status"] = oc.status;
        if (!oc.message.empty()) o["message"] = oc.message;
        o["solver_seed"] = oc.solver_seed;
        o["eigenvalue_error"] = detail::json_number(oc.eigenvalue_error);
        o["eigenvector_error"] = detail::json_number(oc.eigenvector_error);
        if (!oc.eigenvector_status.empty()) o["eigenvector_status"] = oc.eigenvector_status;
        o["assembly_stats"] = to_json(oc.assembly);
        o["solver_stats"] = to_json(oc.solver);
        if (oc.diagnostics) o["pencil_diagnostics"] = to_json(*oc.diagnostics);
        o["timings"] = {{"assemble_s", oc.assemble_seconds}, {"solve_s", oc.solve_seconds}};
        o["eigenvalues"] = std::vector<double>(oc.eigenvalues.data(), oc.eigenvalues.data() + oc.eigenvalues.size());
        j["operators"].push_back(std::move(o));
    }
    return j;
}

inline nlohmann::json rates_json(const BenchmarkResult& r)
{
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : r.series) {
        nlohmann::json e;
        e["operator"] = to_string(s.op);
        e["eta"] = s.eta;
        e["metric"] = s.metric;
        e["n"] = s.ns;
        std::vector<nlohmann::json> mean, se;
        for (std::size_t k = 0; k < s.ns.size(); ++k) {
            mean.push_back(detail::json_number(s.mean[k]));
            se.push_back(detail::json_number(s.stderr_[k]));
        }
        e["mean"] = mean;
        e["stderr"] = se;
        e["ok"] = s.ok;
        e["failed"] = s.failed;
        e["rate"] = s.rate ? detail::json_number(s.rate->fitted_rate) : nlohmann::json(nullptr);
        e["rate_stderr"] = s.rate ? detail::json_number(s.rate->rate_stderr) : nlohmann::json(nullptr);
        e["decreasing"] = s.decreasing;
        e["last_step_decreases"] = s.last_step_decreases;
        j.push_back(std::move(e));
    }
    return j;
}

/// Writes manifest.json, cells/*.json, trials.csv, spectrum.csv,
/// convergence.csv, mode_table.csv and rates.json under `dir`.
inline void write_benchmark_outputs(const BenchmarkResult& r, const std::string& dir)
{
    const RunConfig& c = r.config;
    const std::string man = std::string(to_string(c.manifold));

    nlohmann::json manifest;
    manifest["library_version"] = library_version;
    manifest["config"] = c.to_json();
    manifest["config_hash"] = r.config_hash;
    manifest["timings"] = {{"truth_s", r.truth_seconds}, {"total_s", r.total_seconds}};
    manifest["cells"] = nlohmann::json::array();
    for (const auto& cell : r.cells) {
        char name[96];
        std::snprintf(name, sizeof name, "cells/eta%g_n%lld_t%d.json", cell.eta, static_cast<long long>(cell.n),
                      cell.trial);
        write_json(dir + "/" + name, to_json(cell, c.manifold));
        manifest["cells"].push_back(name);
    }
    manifest["rates"] = rates_json(r);
    write_json(dir + "/manifest.json", manifest);
    write_json(dir + "/rates.json", rates_json(r));

    {
        const std::string path = dir + "/trials.csv";
        auto out = detail::open_for_writing(path);
        out << "manifold,operator,eta,n,trial,seed,status,eigenvalue_error,eigenvector_error\n";
        for (const auto& cell : r.cells)
            for (std::size_t o = 0; o < c.operators.size(); ++o) {
                const OperatorOutcome* oc = o < cell.outcomes.size() ? &cell.outcomes[o] : nullptr;
                out << man << ',' << to_string(c.operators[o]) << ',' << detail::format_double(cell.eta) << ','
                    << cell.n << ',' << cell.trial << ',' << cell.cloud_seed << ','
                    << (cell.status != "ok" ? cell.status : oc->status) << ','
                    << detail::format_double(oc ? oc->eigenvalue_error : std::nan("")) << ','
                    << detail::format_double(oc ? oc->eigenvector_error : std::nan("")) << '\n';
            }
        detail::finish_writing(out, path);
    }
    {
        const BenchmarkTruth truth = build_truth(c);
        const std::string path = dir + "/spectrum.csv";
        auto out = detail::open_for_writing(path);
        out << "manifold,operator,eta,n,trial,seed,mode,eigenvalue,reference\n";
        for (const auto& cell : r.cells)
            for (const auto& oc : cell.outcomes) {
                std::vector<double> ref;
                if (auto it = truth.spectra.find(oc.op); it != truth.spectra.end())
                    ref = it->second.expanded(std::min<std::size_t>(it->second.total_multiplicity(),
                                                                    static_cast<std::size_t>(oc.eigenvalues.size())));
                for (Eigen::Index m = 0; m < oc.eigenvalues.size(); ++m)
                    out << man << ',' << to_string(oc.op) << ',' << detail::format_double(cell.eta) << ',' << cell.n
                        << ',' << cell.trial << ',' << cell.cloud_seed << ',' << m << ','
                        << detail::format_double(oc.eigenvalues(m)) << ','
                        << (static_cast<std::size_t>(m) < ref.size() ? detail::format_double(ref[static_cast<std::size_t>(m)])
                                                                     : std::string("nan"))
                        << '\n';
            }
        detail::finish_writing(out, path);

        const std::string table = dir + "/mode_table.csv";
        auto tab = detail::open_for_writing(table);
        tab << "operator,eta,n,mode,reference,mean_estimate,relative_error,trials\n";
        for (std::size_t o = 0; o < c.operators.size(); ++o)
            for (double eta : c.noise)
                for (auto n : c.n_values) {
                    std::vector<double> sum;
                    std::vector<int> count;
                    for (const auto& cell : r.cells) {
                        if (cell.eta != eta || cell.n != n || o >= cell.outcomes.size() || !cell.outcomes[o].ok()) continue;
                        const auto& ev = cell.outcomes[o].eigenvalues;
                        if (sum.size() < static_cast<std::size_t>(ev.size())) {
                            sum.resize(static_cast<std::size_t>(ev.size()), 0.0);
                            count.resize(sum.size(), 0);
                        }
                        for (Eigen::Index m = 0; m < ev.size(); ++m) {
                            sum[static_cast<std::size_t>(m)] += ev(m);
                            ++count[static_cast<std::size_t>(m)];
                        }
                    }
                    std::vector<double> ref;
                    if (auto it = truth.spectra.find(c.operators[o]); it != truth.spectra.end())
                        ref = it->second.expanded(std::min(it->second.total_multiplicity(), sum.size()));
                    for (std::size_t m = 0; m < sum.size(); ++m) {
                        const double est = sum[m] / count[m];
                        const double rv = m < ref.size() ? ref[m] : std::nan("");
                        const double rel = std::isfinite(rv) && rv != 0.0 ? std::abs(est - rv) / std::abs(rv) : std::nan("");
                        tab << to_string(c.operators[o]) << ',' << detail::format_double(eta) << ',' << n << ',' << m << ','
                            << detail::format_double(rv) << ',' << detail::format_double(est) << ','
                            << detail::format_double(rel) << ',' << count[m] << '\n';
                    }
                }
        detail::finish_writing(tab, table);
    }
    {
        const std::string path = dir + "/convergence.csv";
        auto out = detail::open_for_writing(path);
        out << "operator,eta,metric,n,mean_error,stderr,ok,failed\n";
        for (const auto& s : r.series)
            for (std::size_t k = 0; k < s.ns.size(); ++k)
                out << to_string(s.op) << ',' << detail::format_double(s.eta) << ',' << s.metric << ',' << s.ns[k] << ','
                    << detail::format_double(s.mean[k]) << ',' << detail::format_double(s.stderr_[k]) << ',' << s.ok[k]
                    << ',' << s.failed[k] << '\n';
        detail::finish_writing(out, path);
    }
}

} // namespace curvmesh
