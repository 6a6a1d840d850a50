// Command-line front end: sample, assemble, solve, oracle, benchmark.

#include "curvmesh.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace curvmesh;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

int exit_code_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::unsupported_level: return kExitUsage;
    case ErrorCode::io: return kExitIo;
    default: return kExitNumerical;
    }
}

struct SampleArgs
{
    std::string manifold;
    Eigen::Index n = 0;
    std::uint64_t seed = 1;
    double noise = 0.0;
    std::string out;
    std::string format = "csv";
    bool dim_comment = false;
};

int run_sample(const SampleArgs& a)
{
    const Manifold m = parse_manifold(a.manifold);
    PointCloud cloud = m == Manifold::sphere ? sample_sphere(a.n, a.seed) : sample_torus(a.n, a.seed);
    if (a.noise > 0.0) {
        require(m == Manifold::sphere, ErrorCode::invalid_argument, "--noise applies to the sphere only");
        cloud = add_radial_noise(cloud, a.noise, cell_noise_seed(a.seed, a.n, 0));
    }
    write_cloud_csv(a.out, cloud, a.dim_comment);
    std::cerr << "wrote " << cloud.size() << " points to " << a.out << '\n';
    return kExitOk;
}

struct AssembleArgs
{
    std::string cloud;
    std::string op;
    Eigen::Index k = 0;
    std::string quadrature = "mixed";
    std::string frame_mode = "reduced";
    std::string out_prefix;
    bool pca_frames = false;
    bool no_augment = false;
    bool all_triangles = false;
    std::string dump_frames;
    std::string dump_charts;
};

void dump_frames_csv(const std::string& path, const LocalModel& model)
{
    auto out = curvmesh::detail::open_for_writing(path);
    out << "point,t1x,t1y,t1z,t2x,t2y,t2z,nx,ny,nz,pca0,pca1,pca2\n";
    for (std::size_t i = 0; i < model.frames.size(); ++i) {
        const auto& f = model.frames[i];
        out << i;
        for (Eigen::Index c = 0; c < f.basis.cols(); ++c)
            for (Eigen::Index r = 0; r < f.basis.rows(); ++r) out << ',' << f.basis(r, c);
        for (Eigen::Index r = 0; r < f.pca_eigenvalues.size(); ++r) out << ',' << f.pca_eigenvalues(r);
        out << '\n';
    }
    curvmesh::detail::finish_writing(out, path);
}

void dump_charts_csv(const std::string& path, const LocalModel& model)
{
    auto out = curvmesh::detail::open_for_writing(path);
    out << "point,component,a,b,c,d,e,f,valid\n";
    for (std::size_t i = 0; i < model.polys.size(); ++i) {
        const auto& p = model.polys[i];
        for (Eigen::Index c = 0; c < p.codim(); ++c) {
            out << i << ',' << c;
            for (int r = 0; r < 6; ++r) out << ',' << p.coeffs(r, c);
            out << ',' << int(model.chart_valid[i]) << '\n';
        }
    }
    curvmesh::detail::finish_writing(out, path);
}

int run_assemble(const AssembleArgs& a)
{
    const OperatorKind op = parse_operator(a.op);
    AssemblyOptions aopt;
    aopt.quadrature = parse_quadrature(a.quadrature);
    aopt.frame_mode = parse_frame_mode(a.frame_mode);
    LocalModelOptions mopt;
    mopt.k = a.k;
    mopt.fitted_vector_frames = !a.pca_frames;
    mopt.augment_candidates = !a.no_augment;
    mopt.shared_triangles_only = !a.all_triangles;

    const PointCloud cloud = read_cloud_csv(a.cloud);
    const LocalModel model = build_local_model(cloud, mopt);
    if (!a.dump_frames.empty()) dump_frames_csv(a.dump_frames, model);
    if (!a.dump_charts.empty()) dump_charts_csv(a.dump_charts, model);
    const OperatorPencil p = op == OperatorKind::laplace_beltrami ? assemble_laplace_beltrami(model, aopt)
                                                                  : assemble_vector_pencil(model, op, aopt);

    write_matrix_market(a.out_prefix + "A.mtx", p.A, MatrixSymmetry::symmetric);
    write_matrix_market(a.out_prefix + "B.mtx", p.B, MatrixSymmetry::symmetric);
    write_matrix_market(a.out_prefix + "S.mtx", p.S_raw);
    write_matrix_market(a.out_prefix + "M.mtx", p.M_raw);

    nlohmann::json stats;
    stats["library_version"] = library_version;
    stats["cloud"] = a.cloud;
    stats["points"] = cloud.size();
    stats["operator"] = to_string(op);
    stats["dim"] = p.dim;
    stats["quadrature"] = to_string(aopt.quadrature);
    stats["frame_mode"] = to_string(aopt.frame_mode);
    stats["fitted_vector_frames"] = mopt.fitted_vector_frames;
    stats["augment_candidates"] = mopt.augment_candidates;
    stats["shared_triangles_only"] = mopt.shared_triangles_only;
    stats["model_stats"] = to_json(model.stats);
    stats["assembly_stats"] = to_json(p.stats);
    stats["skipped_fraction"] = p.stats.skipped_fraction();
    write_json(a.out_prefix + "stats.json", stats);
    std::cerr << "assembled " << to_string(op) << " pencil of size " << p.dim << " (skipped fraction "
              << p.stats.skipped_fraction() << ")\n";
    return kExitOk;
}

struct SolveArgs
{
    std::string prefix;
    Eigen::Index modes = 10;
    double tol = 1e-8;
    double sigma = -0.5;
    Eigen::Index block = 0;
    int max_iterations = 500;
    std::uint64_t seed = 0x5eed;
    std::string out;
    std::string vectors;
    std::string manifest;
};

int run_solve(const SolveArgs& a)
{
    const auto A = read_matrix_market(a.prefix + "A.mtx");
    const auto B = read_matrix_market(a.prefix + "B.mtx");
    EigenSolverOptions opt;
    opt.tol = a.tol;
    opt.sigma = a.sigma;
    opt.block_size = a.block;
    opt.max_iterations = a.max_iterations;
    opt.seed = a.seed;

    nlohmann::json manifest;
    manifest["library_version"] = library_version;
    manifest["pencil_prefix"] = a.prefix;
    manifest["dim"] = A.rows();
    manifest["options"] = {{"num_modes", a.modes}, {"tol", a.tol},        {"sigma", a.sigma},
                           {"block_size", a.block}, {"max_iterations", a.max_iterations}, {"seed", a.seed}};
    const std::string manifest_path =
        a.manifest.empty() ? std::filesystem::path(a.out).replace_extension(".json").string() : a.manifest;

    EigenResult r;
    try {
        r = solve_smallest(A, B, a.modes, opt);
    } catch (const ConvergenceError& e) {
        manifest["status"] = std::string(to_string(e.code()));
        manifest["message"] = e.what();
        manifest["best_residuals"] = e.best_residuals();
        write_json(manifest_path, manifest);
        throw;
    }
    write_eigenvalues_csv(a.out, r);
    if (!a.vectors.empty()) write_eigenvectors_csv(a.vectors, r);
    manifest["status"] = "ok";
    manifest["solver_stats"] = to_json(r.solver_stats);
    manifest["eigenvalues"] = std::vector<double>(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size());
    manifest["residuals"] = r.residuals;
    write_json(manifest_path, manifest);
    for (Eigen::Index j = 0; j < r.eigenvalues.size(); ++j) std::cout << r.eigenvalues(j) << '\n';
    return kExitOk;
}

struct OracleArgs
{
    std::string manifold;
    std::string op;
    std::size_t modes = 48;
    int grid = 1024;
    int m_max = 64;
    std::string out;
};

int run_oracle(const OracleArgs& a)
{
    const Manifold m = parse_manifold(a.manifold);
    const OperatorKind op = parse_operator(a.op);
    TorusFdOptions fd;
    fd.grid = a.grid;
    fd.m_max = a.m_max;
    AnalyticSpectrum s;
    if (m == Manifold::sphere) {
        int levels = 1;
        auto count = [&](int l) { return op == OperatorKind::laplace_beltrami ? 2 * l + 1 : 2 * (2 * l + 1); };
        for (std::size_t total = static_cast<std::size_t>(count(1)); total < a.modes;
             total += static_cast<std::size_t>(count(++levels))) {
        }
        s = op == OperatorKind::laplace_beltrami ? sphere_lb_spectrum(levels + 1) : sphere_spectrum(op, levels);
    } else {
        require(op != OperatorKind::bochner, ErrorCode::invalid_argument, "no reference spectrum for the torus Bochner operator");
        s = op == OperatorKind::hodge ? torus_hodge_spectrum_fd(a.modes, fd) : torus_lb_spectrum_fd(a.modes, fd);
    }
    auto out = curvmesh::detail::open_for_writing(a.out);
    out << "level,eigenvalue,multiplicity,source\n";
    for (std::size_t j = 0; j < s.entries.size(); ++j)
        out << j << ',' << s.entries[j].eigenvalue << ',' << s.entries[j].multiplicity << ',' << to_string(s.source)
            << '\n';
    curvmesh::detail::finish_writing(out, a.out);
    return kExitOk;
}

struct BenchmarkArgs
{
    std::string config;
    std::string output_dir;
    int threads = -1;
    bool quiet = false;
};

int run_benchmark_command(const BenchmarkArgs& a)
{
    RunConfig c = read_run_config(a.config);
    if (!a.output_dir.empty()) c.output_dir = a.output_dir;
    if (a.threads >= 0) c.threads = a.threads;
    c.validate();
    const BenchmarkResult r = run_benchmark(c, a.quiet ? nullptr : &std::cerr);
    write_benchmark_outputs(r, c.output_dir);
    for (const auto& s : r.series) {
        std::cout << to_string(s.op) << " eta=" << s.eta << " " << s.metric << ":";
        for (std::size_t k = 0; k < s.ns.size(); ++k) std::cout << " N=" << s.ns[k] << " " << s.mean[k];
        if (s.rate) std::cout << " slope " << s.rate->fitted_rate << " +- " << s.rate->rate_stderr;
        std::cout << '\n';
    }
    std::cout << "outputs in " << c.output_dir << " (config hash " << r.config_hash << ")\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Eigenproblems of Laplacians on point clouds via curved local meshes"};
    app.require_subcommand(1);

    SampleArgs sa;
    auto* sample = app.add_subcommand("sample", "Sample a point cloud");
    sample->add_option("--manifold", sa.manifold, "sphere or torus")->required()->check(CLI::IsMember({"sphere", "torus"}));
    sample->add_option("--n", sa.n, "Number of points")->required()->check(CLI::PositiveNumber);
    sample->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
    sample->add_option("--noise", sa.noise, "Radial noise amplitude (sphere)")->check(CLI::NonNegativeNumber);
    sample->add_option("--out", sa.out, "Output CSV")->required();
    sample->add_option("--format", sa.format, "Output format")->check(CLI::IsMember({"csv"}))->capture_default_str();
    sample->add_flag("--dim-comment", sa.dim_comment, "Write a '# n=<dim>' first line");

    AssembleArgs aa;
    auto* assemble = app.add_subcommand("assemble", "Assemble a stiffness/mass pencil from a cloud");
    assemble->add_option("--cloud", aa.cloud, "Point cloud CSV")->required();
    assemble->add_option("--operator", aa.op, "lb, bochner or hodge")
        ->required()
        ->check(CLI::IsMember({"lb", "laplace_beltrami", "bochner", "hodge"}));
    assemble->add_option("--k", aa.k, "Neighbours per point (0: default)");
    assemble->add_option("--quadrature", aa.quadrature, "mixed, vertex or midpoint")
        ->check(CLI::IsMember({"mixed", "vertex", "midpoint"}))
        ->capture_default_str();
    assemble->add_option("--frame-mode", aa.frame_mode, "reduced or full")
        ->check(CLI::IsMember({"reduced", "full"}))
        ->capture_default_str();
    assemble->add_option("--out-prefix", aa.out_prefix, "Prefix for A.mtx, B.mtx, S.mtx, M.mtx, stats.json")->required();
    assemble->add_flag("--pca-frames", aa.pca_frames, "Vector frames from local PCA instead of the fitted chart");
    assemble->add_flag("--no-augment", aa.no_augment, "Mesh each point from its k nearest neighbours only");
    assemble->add_flag("--all-triangles", aa.all_triangles, "Keep ring triangles not shared by all three vertices");
    assemble->add_option("--dump-frames", aa.dump_frames, "Debug: write tangent frames CSV");
    assemble->add_option("--dump-charts", aa.dump_charts, "Debug: write chart coefficients CSV");

    SolveArgs so;
    auto* solve = app.add_subcommand("solve", "Smallest eigenpairs of a stored pencil");
    solve->add_option("--pencil-prefix", so.prefix, "Prefix of A.mtx and B.mtx")->required();
    solve->add_option("--num-modes", so.modes, "Number of eigenpairs")->check(CLI::PositiveNumber)->capture_default_str();
    solve->add_option("--tol", so.tol, "Relative residual tolerance")->capture_default_str();
    solve->add_option("--sigma", so.sigma, "Shift below the wanted eigenvalues")->capture_default_str();
    solve->add_option("--block-size", so.block, "Subspace size (0: 2L+8)");
    solve->add_option("--max-iterations", so.max_iterations)->capture_default_str();
    solve->add_option("--seed", so.seed, "Start block seed");
    solve->add_option("--out", so.out, "Eigenvalue CSV")->required();
    solve->add_option("--vectors", so.vectors, "Eigenvector CSV");
    solve->add_option("--manifest", so.manifest, "Manifest JSON (default: --out with .json)");

    OracleArgs oa;
    auto* oracle = app.add_subcommand("oracle", "Export a reference spectrum");
    oracle->add_option("--manifold", oa.manifold)->required()->check(CLI::IsMember({"sphere", "torus"}));
    oracle->add_option("--operator", oa.op)->required()->check(CLI::IsMember({"lb", "laplace_beltrami", "bochner", "hodge"}));
    oracle->add_option("--modes", oa.modes, "Modes to cover")->capture_default_str();
    oracle->add_option("--grid", oa.grid, "Torus theta grid")->capture_default_str();
    oracle->add_option("--m-max", oa.m_max, "Largest torus Fourier index")->capture_default_str();
    oracle->add_option("--out", oa.out, "Output CSV")->required();

    BenchmarkArgs ba;
    auto* bench = app.add_subcommand("benchmark", "Run a convergence sweep from a config file");
    bench->add_option("--config", ba.config, "Config file")->required();
    bench->add_option("--output-dir", ba.output_dir, "Override output_dir");
    bench->add_option("--threads", ba.threads, "Override threads (0: all cores)");
    bench->add_flag("--quiet", ba.quiet, "No per-cell progress");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*sample) return run_sample(sa);
        if (*assemble) return run_assemble(aa);
        if (*solve) return run_solve(so);
        if (*oracle) return run_oracle(oa);
        if (*bench) return run_benchmark_command(ba);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitUsage;
}
