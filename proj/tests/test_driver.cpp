#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <unistd.h>

#include <gtest/gtest.h>

#include "tbsbm/driver.hpp"
#include "tbsbm/ed_oracle.hpp"
#include "tbsbm/errors.hpp"
#include "tbsbm/symmetry_probe.hpp"

using namespace tbsbm;
using namespace tbsbm::driver;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_ed() {
    ExperimentConfig c;
    c.solver = Solver::ED;
    c.chain_length = 2;
    c.n_ph = 4;
    c.bias = 0.03;
    c.sweep = {"alpha_x", 0.05, 0.15, 0.05};
    return c;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

ObservableReport with_order(double sz, double sx, double zeta) {
    ObservableReport r;
    r.sigma_z = sz;
    r.sigma_x = sx;
    r.order = OrderParameterReport{};
    r.order->zeta = zeta;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

} // namespace

TEST(SweepAxis, InclusiveRangeByMultiples) {
    const SweepAxis a{"alpha_x", 0.05, 0.15, 0.05};
    const auto v = a.values();
    ASSERT_EQ(v.size(), 3u);
    EXPECT_EQ(v[2], 0.05 + 2.0 * 0.05);
    EXPECT_TRUE((SweepAxis{"alpha_x", 1.0, 0.0, 0.1}.values().empty()));
    EXPECT_THROW((SweepAxis{"alpha_x", 0.0, 1.0, 0.0}.values()), ContractViolation);
    EXPECT_THROW((SweepAxis{"omega", 0.0, 1.0, 0.1}.validate()), ContractViolation);
}

TEST(Config, WithReplacesOneParameter) {
    const ExperimentConfig c = tiny_ed();
    const ExperimentConfig d = c.with("alpha_z", 0.3);
    EXPECT_EQ(d.alpha_z, 0.3);
    EXPECT_EQ(d.alpha_x, c.alpha_x);
    EXPECT_EQ(c.with("s", 0.7).s, 0.7);
    EXPECT_THROW(c.with("n_ph", 3.0), ContractViolation);
}

TEST(Config, ProvenanceEmbedsSeedAndVersion) {
    ExperimentConfig c = tiny_ed();
    c.seed = 4242;
    std::ostringstream out;
    write_provenance(out, c, "test");
    const auto ls = lines(out.str());
    ASSERT_EQ(ls.size(), 2u);
    EXPECT_EQ(ls[0], "# tbsbm " + version() + " test");
    const auto j = nlohmann::json::parse(ls[1].substr(std::string("# config ").size()));
    EXPECT_EQ(j["seed"], 4242);
    EXPECT_EQ(j["solver"], "ed");
    EXPECT_EQ(j["sweep"]["step"], 0.05);
}

TEST(Config, RejectsInvalid) {
    ExperimentConfig c = tiny_ed();
    c.workers = 0;
    EXPECT_THROW(c.validate(), ContractViolation);
    c = tiny_ed();
    c.alpha_z = -0.1;
    EXPECT_ANY_THROW(c.validate());
    c = tiny_ed();
    c.dtheta_divisor = 2.5;
    EXPECT_THROW(c.validate(), ContractViolation);
}

TEST(Sweep, EmptyRangeGivesHeaderOnlyTable) {
    ExperimentConfig c = tiny_ed();
    c.sweep = {"alpha_x", 1.0, 0.5, 0.1};
    const auto rows = run_sweep(c);
    EXPECT_TRUE(rows.empty());
    std::ostringstream out;
    write_sweep_csv(out, c, rows);
    const auto ls = lines(out.str());
    ASSERT_EQ(ls.size(), 3u);
    EXPECT_EQ(ls[2], "alpha_x,status," + observable_csv_header() + ",error");
}

TEST(Sweep, EdRowsMatchDirectCalls) {
    const ExperimentConfig c = tiny_ed();
    const auto rows = run_sweep(c);
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& r : rows) {
        ASSERT_TRUE(r.ok) << r.error;
        ExperimentConfig p = c;
        p.alpha_x = r.value;
        const ed::DenseModel d = dense_model(p);
        const Eigen::VectorXd g = ed::ground_state(d).vectors.col(0);
        ObservableReport direct = ed::dense_observables(d, g);
        symmetry::RotationOptions o;
        o.dtheta = std::numbers::pi / p.dtheta_divisor;
        direct.order = symmetry::order_parameter(d, Eigen::VectorXcd(g.cast<std::complex<double>>()), o);
        EXPECT_EQ(observable_csv_row(r.report), observable_csv_row(direct));
    }
}

TEST(Sweep, WorkerCountDoesNotChangeOutput) {
    ExperimentConfig c = tiny_ed();
    c.sweep = {"alpha_x", 0.02, 0.2, 0.02};
    std::ostringstream one, many;
    write_sweep_csv(one, c, run_sweep(c));
    c.workers = 4;
    const auto rows = run_sweep(c);
    c.workers = 1;  // provenance records the config, keep it equal
    write_sweep_csv(many, c, rows);
    EXPECT_EQ(one.str(), many.str());
}

TEST(Sweep, FailedPointIsLoggedAndSweepContinues) {
    ExperimentConfig c = tiny_ed();
    c.sweep = {"alpha_x", -0.05, 0.05, 0.1};
    const auto rows = run_sweep(c);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_FALSE(rows[0].ok);
    EXPECT_FALSE(rows[0].error.empty());
    EXPECT_TRUE(rows[1].ok);
    std::ostringstream out;
    write_sweep_csv(out, c, rows);
    const auto ls = lines(out.str());
    ASSERT_EQ(ls.size(), 5u);
    EXPECT_NE(ls[3].find(",failed,"), std::string::npos);
    EXPECT_NE(ls[4].find(",ok,"), std::string::npos);
}

TEST(FanOut, ResultsInIndexOrder) {
    const auto rows = fan_out(17, 5, [](std::size_t k) {
        PointResult p;
        p.value = static_cast<double>(k);
        p.ok = k % 3 != 0;
        if (k == 9) throw std::runtime_error("boom");
        return p;
    });
    ASSERT_EQ(rows.size(), 17u);
    for (std::size_t k = 0; k < 17; ++k)
        if (k != 9) {
            EXPECT_EQ(rows[k].value, static_cast<double>(k));
        }
    EXPECT_FALSE(rows[9].ok);
    EXPECT_EQ(rows[9].error, "boom");
}

TEST(Classifier, Examples) {
    EXPECT_EQ(classify_phase(with_order(0.8, 0.0, 1.0), false), Phase::Localized);
    EXPECT_EQ(classify_phase(with_order(0.0, 0.0, 1.0), true), Phase::Critical);
    EXPECT_EQ(classify_phase(with_order(0.0, 0.0, 0.4), true), Phase::Unknown);
    EXPECT_EQ(classify_phase(with_order(0.01, -0.6, 0.99), false), Phase::Delocalized);
    // vanishing magnetizations off the symmetric line fit no phase
    EXPECT_EQ(classify_phase(with_order(0.0, 0.0, 1.0), false), Phase::Unknown);
    ObservableReport bare;
    bare.sigma_z = 0.9;
    EXPECT_EQ(classify_phase(bare, false), Phase::Unknown);
}

TEST(Classifier, ThresholdsAreExplicit) {
    const ClassifierThresholds wide{0.5, 0.7};
    EXPECT_EQ(classify_phase(with_order(0.3, 0.0, 0.4), true, wide), Phase::Critical);
    EXPECT_EQ(classify_phase(with_order(0.3, 0.0, 0.4), true), Phase::Unknown);
}

TEST(PhaseDiagram, SinglePointGridGivesOneClassifiedRow) {
    ExperimentConfig c = tiny_ed();
    c.phase_s = {0.5};
    c.phase_alpha = {0.1};
    const auto res = run_phase_diagram(c);
    ASSERT_EQ(res.points.size(), 1u);
    ASSERT_TRUE(res.points[0].ok) << res.points[0].error;
    ASSERT_TRUE(res.points[0].report.order.has_value());
    EXPECT_EQ(res.points[0].label, classify_phase(res.points[0].report, true, c.thresholds));
    ASSERT_EQ(res.transitions.size(), 1u);
    EXPECT_FALSE(res.transitions[0].s.has_value());
    std::ostringstream out;
    write_phase_csv(out, c, res);
    EXPECT_EQ(lines(out.str()).size(), 4u);
}

TEST(PhaseDiagram, RequiresGrid) {
    ExperimentConfig c = tiny_ed();
    EXPECT_THROW(run_phase_diagram(c), ContractViolation);
}

TEST(Cli, RerunIsByteIdentical) {
    const fs::path root = fs::temp_directory_path() / ("tbsbm_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    {
        std::ofstream cfg(root / "run.cfg");
        cfg << "solver = ed\nchain_length = 2\nn_ph = 4\nbias = 0.02\nsweep_start = 0.05\nsweep_stop = 0.15\nsweep_step = 0.05\nseed = 7\n";
    }
    const std::string cli = TBSBM_CLI_PATH;
    auto run = [&](const std::string& args, const fs::path& out) {
        const std::string cmd = cli + " " + args + " --out " + out.string() + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    for (const char* dir : {"a", "b"}) {
        ASSERT_EQ(run("sweep --config " + (root / "run.cfg").string() + " --workers 2", root / dir), 0);
        ASSERT_EQ(run("variational --var_modes 4 --var_restarts 2 --var_terms 2 --seed 3", root / dir), 0);
        ASSERT_EQ(run("dmrg --chain_length 3 --bond_dim 6 --n_bare 5 --n_opt 3 --bias 0.05 --seed 5", root / dir), 0);
        ASSERT_EQ(run("chain-coeffs --chain_length 8", root / dir), 0);
    }
    for (const char* f : {"sweep.csv", "state.json", "checkpoint.json", "observables.csv", "chain_z.csv", "chain_x.csv"}) {
        const std::string a = slurp(root / "a" / f);
        EXPECT_FALSE(a.empty()) << f;
        EXPECT_EQ(a, slurp(root / "b" / f)) << f;
    }
    EXPECT_NE(slurp(root / "a" / "sweep.csv").find("\"seed\":7"), std::string::npos);
    // a failing point turns the exit status nonzero
    EXPECT_NE(run("sweep --solver ed --chain_length 1 --n_ph 3 --sweep_start -0.1 --sweep_stop 0.1 --sweep_step 0.2", root / "c"), 0);
    EXPECT_TRUE(fs::exists(root / "c" / "sweep.csv"));
    fs::remove_all(root);
}
