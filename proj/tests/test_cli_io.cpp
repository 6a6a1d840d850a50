#include "test_support.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace curvmesh;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("curvmesh_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(CURVMESH_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

RunConfig parse_config(const std::string& text)
{
    std::istringstream in(text);
    return RunConfig::from_json(parse_flat_config(in));
}

} // namespace

TEST(MatrixMarket, RoundTripGeneralAndSymmetric)
{
    SparseMatrix m(3, 3);
    m.insert(0, 0) = 0.1;
    m.insert(2, 1) = -1.0 / 3.0;
    m.insert(1, 2) = -1.0 / 3.0;
    m.insert(2, 2) = 1e-300;
    m.makeCompressed();
    for (auto sym : {MatrixSymmetry::general, MatrixSymmetry::symmetric}) {
        std::stringstream s;
        write_matrix_market(s, m, sym);
        const SparseMatrix back = read_matrix_market(s);
        EXPECT_EQ(Eigen::MatrixXd(back), Eigen::MatrixXd(m));
    }
}

TEST(MatrixMarket, SymmetricHeaderAndLowerTriangle)
{
    SparseMatrix m(2, 2);
    m.insert(0, 1) = 2.0;
    m.insert(1, 0) = 2.0;
    std::stringstream s;
    write_matrix_market(s, m, MatrixSymmetry::symmetric);
    EXPECT_EQ(s.str(), "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 2\n");
}

TEST(MatrixMarket, RejectsAsymmetricSymmetricStorage)
{
    SparseMatrix m(2, 2);
    m.insert(0, 1) = 2.0;
    std::stringstream s;
    EXPECT_THROW(write_matrix_market(s, m, MatrixSymmetry::symmetric), Error);
}

TEST(MatrixMarket, ReadsPatternAndComments)
{
    std::stringstream s("%%MatrixMarket matrix coordinate pattern general\n% comment\n2 2 2\n1 1\n2 1\n");
    const SparseMatrix m = read_matrix_market(s);
    EXPECT_EQ(m.coeff(0, 0), 1.0);
    EXPECT_EQ(m.coeff(1, 0), 1.0);
    EXPECT_EQ(m.nonZeros(), 2);
}

TEST(MatrixMarket, RejectsMalformedInput)
{
    for (const char* text : {"", "%%MatrixMarket matrix array real general\n1 1\n1\n",
                             "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
                             "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n"}) {
        std::stringstream s(text);
        try {
            read_matrix_market(s);
            ADD_FAILURE() << "accepted: " << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::io);
        }
    }
}

TEST(EigenvalueCsv, RoundTrip)
{
    EigenResult r;
    r.eigenvalues = Eigen::Vector3d(0.1, 1.0 / 3.0, 2.0);
    r.residuals = {1e-9, 2e-9, 3e-9};
    std::stringstream s;
    write_eigenvalues_csv(s, r);
    EXPECT_EQ(s.str().substr(0, 25), "index,eigenvalue,residual");
    EXPECT_EQ(read_eigenvalues_csv(s), r.eigenvalues);
}

TEST(FlatConfig, ParsesValuesAndComments)
{
    const RunConfig c = parse_config(
        "# sweep\nname = \"demo # not a comment\"\nmanifold = \"sphere\"\nn = [100, 200]  # sizes\n"
        "noise = [0.0, 0.01]\noperators = [\"bochner\"]\ntrials = 3\nfitted_vector_frames = false\n");
    EXPECT_EQ(c.name, "demo # not a comment");
    EXPECT_EQ(c.n_values, (std::vector<Eigen::Index>{100, 200}));
    EXPECT_EQ(c.noise.size(), 2u);
    EXPECT_EQ(c.operators, std::vector<OperatorKind>{OperatorKind::bochner});
    EXPECT_EQ(c.trials, 3);
    EXPECT_FALSE(c.fitted_vector_frames);
    EXPECT_EQ(c.sigma, -0.5);
}

TEST(FlatConfig, RejectsBadInput)
{
    for (const char* text : {"trials = 1\ntrials = 2\n", "bogus = 1\n", "trials = \"ten\"\n", "trials = 0\n",
                             "n = []\n", "n = [8]\n", "manifold = \"klein\"\n", "just words\n",
                             "manifold = \"torus\"\nnoise = [0.1]\n", "operators = [\"curl\"]\n"}) {
        try {
            parse_config(text);
            ADD_FAILURE() << "accepted: " << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::invalid_argument) << text;
        }
    }
}

TEST(FlatConfig, JsonEchoRoundTripsAndHashIsStable)
{
    const RunConfig a = parse_config("n = [100, 200, 400]\ntrials = 2\n");
    const RunConfig b = RunConfig::from_json(a.to_json());
    EXPECT_EQ(a.to_json(), b.to_json());
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
    const RunConfig c = parse_config("n = [100, 200, 400]\ntrials = 3\n");
    EXPECT_NE(config_hash(a), config_hash(c));
}

TEST(Benchmark, OutputsAreReproducibleAcrossRunsAndThreads)
{
    RunConfig c = parse_config("n = [300, 400, 500]\ntrials = 2\noperators = [\"lb\", \"bochner\"]\n"
                               "num_eigenvalues = 8\nnum_fields = 6\n");
    const fs::path root = scratch_dir("bench");
    std::vector<std::string> csvs{"trials.csv", "spectrum.csv", "mode_table.csv", "convergence.csv", "rates.json"};
    std::map<std::string, std::string> first;
    for (int threads : {1, 2, 1}) {
        c.threads = threads;
        const BenchmarkResult r = run_benchmark(c, nullptr);
        const fs::path dir = root / ("t" + std::to_string(threads) + "_" + std::to_string(first.size()));
        write_benchmark_outputs(r, dir.string());
        for (const auto& f : csvs) {
            const std::string text = slurp(dir / f);
            ASSERT_FALSE(text.empty()) << f;
            if (!first.count(f)) first[f] = text;
            else EXPECT_EQ(text, first[f]) << f << " threads " << threads;
        }
        EXPECT_TRUE(fs::exists(dir / "manifest.json"));
        EXPECT_EQ(std::distance(fs::directory_iterator(dir / "cells"), fs::directory_iterator{}), 6);
    }
    // Every trial row names its manifold, operator, N, trial and seed.
    std::istringstream rows(first["trials.csv"]);
    std::string line;
    std::getline(rows, line);
    EXPECT_EQ(line, "manifold,operator,eta,n,trial,seed,status,eigenvalue_error,eigenvector_error");
    int count = 0;
    while (std::getline(rows, line)) {
        ++count;
        EXPECT_EQ(line.rfind("sphere,", 0), 0u);
        EXPECT_NE(line.find(",ok,"), std::string::npos) << line;
    }
    EXPECT_EQ(count, 12);
}

TEST(Cli, SampleWritesUnitSphereCloud)
{
    const fs::path dir = scratch_dir("sample");
    ASSERT_EQ(run_cli("sample --manifold sphere --n 4000 --seed 3 --out " + (dir / "c.csv").string()), 0);
    const PointCloud c = read_cloud_csv((dir / "c.csv").string());
    EXPECT_EQ(c.size(), 4000);
    EXPECT_LE((c.points.colwise().norm().array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_TRUE(c.points.cwiseEqual(sample_sphere(4000, 3).points).all());
}

TEST(Cli, UsageErrorsExitTwo)
{
    const fs::path dir = scratch_dir("usage");
    EXPECT_EQ(run_cli("sample --manifold sphere --out " + (dir / "c.csv").string()), 2);
    EXPECT_EQ(run_cli("sample --manifold klein --n 10 --out " + (dir / "c.csv").string()), 2);
    EXPECT_EQ(run_cli(""), 2);
    ASSERT_EQ(run_cli("sample --manifold sphere --n 300 --out " + (dir / "c.csv").string()), 0);
    EXPECT_EQ(run_cli("assemble --cloud " + (dir / "c.csv").string() + " --operator curl --out-prefix " +
                      (dir / "p_").string()),
              2);
}

TEST(Cli, IoErrorsExitFour)
{
    const fs::path dir = scratch_dir("io");
    EXPECT_EQ(run_cli("solve --pencil-prefix " + (dir / "missing_").string() + " --out " + (dir / "e.csv").string()), 4);
    EXPECT_EQ(run_cli("assemble --cloud " + (dir / "none.csv").string() + " --operator lb --out-prefix " +
                      (dir / "p_").string()),
              4);
}

TEST(Cli, IdentityAndDiagonalFixtures)
{
    const fs::path dir = scratch_dir("fixtures");
    SparseMatrix i(20, 20);
    i.setIdentity();
    write_matrix_market((dir / "id_A.mtx").string(), i, MatrixSymmetry::symmetric);
    write_matrix_market((dir / "id_B.mtx").string(), i, MatrixSymmetry::symmetric);
    ASSERT_EQ(run_cli("solve --pencil-prefix " + (dir / "id_").string() + " --num-modes 5 --out " +
                      (dir / "id.csv").string()),
              0);
    const Eigen::VectorXd ones = read_eigenvalues_csv((dir / "id.csv").string());
    ASSERT_EQ(ones.size(), 5);
    EXPECT_LE((ones.array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_TRUE(fs::exists(dir / "id.json"));

    SparseMatrix a(4, 4), b(4, 4);
    const double av[] = {4, 1, 9, 6}, bv[] = {2, 1, 3, 1};
    for (int k = 0; k < 4; ++k) {
        a.insert(k, k) = av[k];
        b.insert(k, k) = bv[k];
    }
    write_matrix_market((dir / "d_A.mtx").string(), a, MatrixSymmetry::symmetric);
    write_matrix_market((dir / "d_B.mtx").string(), b, MatrixSymmetry::symmetric);
    ASSERT_EQ(run_cli("solve --pencil-prefix " + (dir / "d_").string() + " --num-modes 3 --out " +
                      (dir / "d.csv").string()),
              0);
    const Eigen::VectorXd d = read_eigenvalues_csv((dir / "d.csv").string());
    EXPECT_NEAR(d(0), 1.0, 1e-12);
    EXPECT_NEAR(d(1), 2.0, 1e-12);
    EXPECT_NEAR(d(2), 3.0, 1e-12);
}

TEST(Cli, IndefiniteMassExitsThree)
{
    const fs::path dir = scratch_dir("indefinite");
    SparseMatrix a(4, 4), b(4, 4);
    for (int k = 0; k < 4; ++k) {
        a.insert(k, k) = 1.0;
        b.insert(k, k) = k == 2 ? -1.0 : 1.0;
    }
    write_matrix_market((dir / "x_A.mtx").string(), a, MatrixSymmetry::symmetric);
    write_matrix_market((dir / "x_B.mtx").string(), b, MatrixSymmetry::symmetric);
    EXPECT_EQ(run_cli("solve --pencil-prefix " + (dir / "x_").string() + " --num-modes 2 --out " +
                      (dir / "x.csv").string()),
              3);
}

TEST(Cli, SphereEndToEnd)
{
    const fs::path dir = scratch_dir("e2e");
    const std::string cloud = (dir / "cloud.csv").string(), prefix = (dir / "bochner_").string();
    ASSERT_EQ(run_cli("sample --manifold sphere --n 2000 --seed 5 --out " + cloud), 0);
    ASSERT_EQ(run_cli("assemble --cloud " + cloud + " --operator bochner --out-prefix " + prefix), 0);
    for (const char* f : {"A.mtx", "B.mtx", "S.mtx", "M.mtx", "stats.json"}) EXPECT_TRUE(fs::exists(prefix + f)) << f;
    const auto stats = read_json(prefix + "stats.json");
    EXPECT_LE(stats["skipped_fraction"].get<double>(), 0.01);
    const SparseMatrix a = read_matrix_market(prefix + "A.mtx");
    EXPECT_EQ(a.rows(), 4000);
    EXPECT_EQ(curvmesh::testing::max_abs_asymmetry(a), 0.0);
    ASSERT_EQ(run_cli("solve --pencil-prefix " + prefix + " --num-modes 6 --out " + (dir / "e.csv").string()), 0);
    const Eigen::VectorXd e = read_eigenvalues_csv((dir / "e.csv").string());
    EXPECT_NEAR(e.mean(), 1.0, 0.05);
}

TEST(Cli, OracleExport)
{
    const fs::path dir = scratch_dir("oracle");
    ASSERT_EQ(run_cli("oracle --manifold sphere --operator hodge --modes 16 --out " + (dir / "s.csv").string()), 0);
    const std::string text = slurp(dir / "s.csv");
    EXPECT_EQ(text.substr(0, text.find('\n')), "level,eigenvalue,multiplicity,source");
    EXPECT_NE(text.find("\n0,2,6,"), std::string::npos);
}
