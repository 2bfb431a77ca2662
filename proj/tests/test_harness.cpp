#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lonrec/harness.hpp"
#include "lonrec/io.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>

using namespace lonrec;

TEST_CASE("average_unitaries") {
    Rng rng(1);
    const Unitary u = haar_unitary(4, rng);

    SUBCASE("identical samples average to themselves") {
        const AveragedUnitary avg = average_unitaries({u, u, u});
        CHECK(max_abs(avg.mean.mat() - gauge_fix(u).canonical.mat()) < 1e-12);
        CHECK(avg.entry_std.maxCoeff() < 1e-12);
    }
    SUBCASE("gauge copies collapse onto one sample") {
        Mat d1 = Mat::Identity(4, 4), d2 = Mat::Identity(4, 4);
        for (int i = 0; i < 4; ++i) {
            d1(i, i) = std::polar(1.0, rng.uniform(-M_PI, M_PI));
            d2(i, i) = std::polar(1.0, rng.uniform(-M_PI, M_PI));
        }
        const Unitary gauged{Mat(d1 * u.mat() * d2)};
        const AveragedUnitary avg = average_unitaries({u, gauged});
        CHECK(avg.entry_std.maxCoeff() < 1e-12);
        CHECK(fidelity(u, avg.mean) >= 1.0 - 1e-10);
    }
    SUBCASE("the average of distinct samples is still unitary") {
        Rng r(2);
        std::vector<Unitary> samples;
        for (int i = 0; i < 5; ++i) samples.push_back(haar_unitary(4, r));
        const AveragedUnitary avg = average_unitaries(samples);
        CHECK(unitarity_defect(avg.mean.mat()) < 1e-10);
        CHECK(avg.entry_std.maxCoeff() > 0.0);
    }
    SUBCASE("no samples is an error") {
        CHECK_THROWS_AS(average_unitaries({}), Error);
    }
}

TEST_CASE("run_cell") {
    Rng rng(3);
    const Unitary h = haar_unitary(4, rng);

    SUBCASE("zero noise is exact for every method") {
        for (Method method : {Method::brisbane, Method::bristol, Method::vienna,
                              Method::vienna_reduced}) {
            const TrialRecord rec = run_cell(h, method, 0.0, 3, 42);
            CHECK(rec.fidelity >= 1.0 - 1e-6);
            CHECK(rec.skipped == 0);
        }
    }
    SUBCASE("a fixed seed reproduces the record bit for bit") {
        const TrialRecord a = run_cell(h, Method::brisbane, 0.025, 5, 77);
        const TrialRecord b = run_cell(h, Method::brisbane, 0.025, 5, 77);
        CHECK(a.fidelity == b.fidelity);
        CHECK(a.mean_entry_std == b.mean_entry_std);
    }
    SUBCASE("noise lowers the fidelity") {
        const TrialRecord rec = run_cell(h, Method::brisbane, 0.05, 10, 5);
        CHECK(rec.fidelity < 1.0 - 1e-5);
        CHECK(rec.fidelity > 0.9);
    }
}

TEST_CASE("brisbane most-probable infidelity grows linearly in sigma at m=12") {
    ExperimentGrid grid;
    grid.ms = {12};
    grid.sigmas = {0.01, 0.025, 0.05, 0.075, 0.1};
    grid.methods = {Method::brisbane};
    grid.haar_draws = 20;
    grid.iterations = 20;
    grid.master_seed = 20250801;
    const SweepResult result = sweep(grid);
    std::vector<double> sigmas, infidelities;
    for (const auto& s : result.summaries) {
        sigmas.push_back(s.sigma);
        infidelities.push_back(1.0 - s.fit.mode);
    }
    const auto fit = oracles::linear_fit(sigmas, infidelities);
    CHECK(fit.r_squared > 0.95);
    CHECK(fit.slope > 0.0);
}

TEST_CASE("sweep") {
    SUBCASE("a 1x1 grid with J=2, I=2 gives 2 records and 1 summary") {
        ExperimentGrid grid;
        grid.ms = {4};
        grid.sigmas = {0.025};
        grid.methods = {Method::brisbane};
        grid.haar_draws = 2;
        grid.iterations = 2;
        grid.master_seed = 9;
        const SweepResult result = sweep(grid);
        CHECK(result.trials.size() == 2);
        CHECK(result.summaries.size() == 1);
        CHECK(result.failures.empty());
        CHECK(result.summaries[0].fit.n == 2);
    }
    SUBCASE("records keep the enumeration order and zero runtimes by default") {
        ExperimentGrid grid;
        grid.ms = {4};
        grid.sigmas = {0.01, 0.05};
        grid.methods = {Method::brisbane, Method::bristol};
        grid.haar_draws = 2;
        grid.iterations = 2;
        grid.master_seed = 10;
        const SweepResult result = sweep(grid);
        REQUIRE(result.trials.size() == 8);
        CHECK(result.trials[0].sigma == 0.01);
        CHECK(result.trials[0].method == Method::brisbane);
        CHECK(result.trials[2].method == Method::bristol);
        CHECK(result.trials[4].sigma == 0.05);
        for (const auto& t : result.trials) CHECK(t.runtime_ms == 0.0);
    }
    SUBCASE("worker counts do not change a byte of the output") {
        ExperimentGrid grid;
        grid.ms = {4, 5};
        grid.sigmas = {0.025};
        grid.methods = {Method::brisbane, Method::vienna};
        grid.haar_draws = 3;
        grid.iterations = 2;
        grid.master_seed = 11;
        const SweepResult serial = sweep(grid, 1);
        const SweepResult parallel = sweep(grid, 4);
        CHECK(io::trials_csv(serial.trials) == io::trials_csv(parallel.trials));
        CHECK(io::summaries_csv(serial.summaries) == io::summaries_csv(parallel.summaries));
    }
    SUBCASE("the bristol draw count can differ") {
        ExperimentGrid grid;
        grid.ms = {4};
        grid.sigmas = {0.05};
        grid.methods = {Method::brisbane, Method::bristol};
        grid.haar_draws = 2;
        grid.bristol_haar_draws = 4;
        grid.iterations = 2;
        grid.master_seed = 12;
        const SweepResult result = sweep(grid);
        int bristol_rows = 0;
        for (const auto& t : result.trials) bristol_rows += t.method == Method::bristol;
        CHECK(bristol_rows == 4);
        CHECK(result.trials.size() == 6);
    }
}

TEST_CASE("a paper-scale brisbane cell finishes within its budget") {
    Rng rng(13);
    const Unitary h = haar_unitary(4, rng);
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 1.0;
    for (int j = 0; j < 120; ++j) {
        const TrialRecord rec =
            run_cell(h, Method::brisbane, 0.025, 120, derive_seed(14, {std::uint64_t(j)}));
        worst = std::min(worst, rec.fidelity);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(seconds < 60.0);
    CHECK(worst > 0.95);
}

TEST_CASE("lossy sweep produces scores and summaries") {
    LossyGrid grid;
    grid.eps_values = {0.0, 0.1};
    grid.networks = 3;
    grid.iterations = 2;
    grid.sigma = 0.01;
    grid.master_seed = 15;
    const LossySweepResult result = lossy_sweep(grid);
    CHECK(result.failures.empty());
    REQUIRE(result.trials.size() == 2 * 3 * 3);

    // vienna rows carry an embedded fidelity, the passive methods do not
    for (const auto& t : result.trials) {
        if (t.method == Method::vienna) {
            CHECK(std::isfinite(t.fidelity_embedded));
        } else {
            CHECK(!std::isfinite(t.fidelity_embedded));
        }
        CHECK(t.q_t >= 0.0);
        CHECK(t.q_vis >= 0.0);
    }
    // 3 networks per cell is below the fit threshold: degenerate summaries
    CHECK(!result.summaries.empty());
    for (const auto& s : result.summaries) CHECK(s.fit.n == 3);

    // determinism across worker counts
    const LossySweepResult again = lossy_sweep(grid, 3);
    CHECK(io::lossy_trials_csv(result.trials) == io::lossy_trials_csv(again.trials));
}

TEST_CASE("summarize_fidelities falls back below 20 samples") {
    const FitSummary s = summarize_fidelities({0.9, 0.95, 0.92});
    CHECK(s.degenerate);
    CHECK(s.n == 3);
    CHECK(s.mode == 0.92);
}
