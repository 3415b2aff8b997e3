#include "kpi/bspline.hpp"
#include "kpi/errors.hpp"

#include "oracles.hpp"
#include "synthetic.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

using namespace kpi;

TEST(KnotVector, RejectsInvalid) {
    EXPECT_THROW(KnotVector(3, {0, 0, 0, 1, 1, 1, 1}), DomainError);
    EXPECT_THROW(KnotVector(2, {0, 0, 0, 0.7, 0.3, 1, 1, 1}), DomainError);
    EXPECT_THROW(KnotVector(1, {0, 0, 0.5, 0.5, 1, 1}), DomainError);
    EXPECT_THROW(KnotVector(2, {0, 0, 0, 1.5, 1, 1, 1}), DomainError);
    EXPECT_NO_THROW(KnotVector(3, {0, 0, 0, 0, 1, 1, 1, 1}));
}

TEST(KnotVector, WithKnotRespectsMultiplicity) {
    KnotVector kv(2, {0, 0, 0, 0.5, 1, 1, 1});
    auto k2 = kv.with_knot(0.5);
    EXPECT_EQ(k2.multiplicity(0.5), 2);
    EXPECT_EQ(k2.control_count(), kv.control_count() + 1);
    EXPECT_THROW(k2.with_knot(0.5), RefinementError);
}

TEST(FindSpan, SpecExamples) {
    KnotVector kv(3, {0, 0, 0, 0, 0.5, 1, 1, 1, 1});
    EXPECT_EQ(find_span(kv, 0.0), 3);
    EXPECT_EQ(find_span(kv, 0.25), 3);
    EXPECT_EQ(find_span(kv, 0.5), 4);
    EXPECT_EQ(find_span(kv, 1.0), 4);
}

TEST(FindSpan, MatchesLinearScan) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uu(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        const int p = 1 + trial % 4;
        auto kv = synth::random_kv(p, p + 1 + trial % 9, rng);
        const auto U = synth::to_vec(kv);
        for (double u : {0.0, 1.0, uu(rng), uu(rng), U[static_cast<std::size_t>(p + 1)]}) {
            EXPECT_EQ(find_span(kv, u), oracle::span_scan(U, p, u)) << "u=" << u;
        }
    }
}

TEST(FindSpan, OutOfDomainThrows) {
    auto kv = KnotVector::uniform(3, 6);
    EXPECT_THROW(find_span(kv, -0.01), DomainError);
    EXPECT_THROW(find_span(kv, 1.01), DomainError);
}

TEST(BasisFuns, CubicAtMidpoint) {
    KnotVector kv(3, {0, 0, 0, 0, 1, 1, 1, 1});
    auto n = basis_funs(kv, 0.5);
    ASSERT_EQ(n.size(), 4u);
    EXPECT_NEAR(n[0], 0.125, 1e-15);
    EXPECT_NEAR(n[1], 0.375, 1e-15);
    EXPECT_NEAR(n[2], 0.375, 1e-15);
    EXPECT_NEAR(n[3], 0.125, 1e-15);
}

TEST(BasisFuns, PartitionOfUnityAndLocalSupport) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uu(0, 1);
    for (int trial = 0; trial < 1000; ++trial) {
        const int p = 1 + trial % 5;
        auto kv = synth::random_kv(p, p + 1 + trial % 10, rng);
        const double u = trial % 50 == 0 ? 1.0 : uu(rng);
        auto n = basis_funs(kv, u);
        const double s = std::accumulate(n.begin(), n.end(), 0.0);
        EXPECT_NEAR(s, 1.0, 1e-12);
        for (double v : n) EXPECT_GE(v, -1e-15);

        const auto U = synth::to_vec(kv);
        const int span = find_span(kv, u);
        const auto full = oracle::all_basis(U, p, u);
        for (int j = 0; j < static_cast<int>(full.size()); ++j) {
            if (j < span - p || j > span) {
                EXPECT_EQ(full[static_cast<std::size_t>(j)], 0.0);
            } else {
                EXPECT_NEAR(full[static_cast<std::size_t>(j)], n[static_cast<std::size_t>(j - span + p)], 1e-12);
            }
        }
    }
}

TEST(EvalCurve, ConstantAndEndpoints) {
    auto kv = KnotVector::uniform(3, 7);
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(7, 2, 3.5);
    BSplineCurve curve(kv, c);
    for (double u : {0.0, 0.13, 0.5, 0.77, 1.0}) {
        auto v = eval_curve(curve, u);
        EXPECT_NEAR(v(0), 3.5, 1e-14);
        EXPECT_NEAR(v(1), 3.5, 1e-14);
    }
    Eigen::MatrixXd r = Eigen::MatrixXd::Random(7, 2);
    BSplineCurve c2(kv, r);
    EXPECT_TRUE(eval_curve(c2, 0.0).isApprox(r.row(0).transpose()));
    EXPECT_TRUE(eval_curve(c2, 1.0).isApprox(r.row(6).transpose()));
    EXPECT_THROW(eval_curve(c2, 1.5), DomainError);
}

TEST(EvalCurve, MatchesNaiveSum) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uu(0, 1);
    auto kv = synth::random_kv(3, 9, rng);
    Eigen::MatrixXd c = Eigen::MatrixXd::Random(9, 1);
    BSplineCurve curve(kv, c);
    const auto U = synth::to_vec(kv);
    for (int i = 0; i < 100; ++i) {
        const double u = uu(rng);
        const auto n = oracle::all_basis(U, 3, u);
        double ref = 0;
        for (int j = 0; j < 9; ++j) ref += c(j, 0) * n[static_cast<std::size_t>(j)];
        EXPECT_NEAR(eval_curve(curve, u)(0), ref, 1e-12);
    }
}

namespace {

double naive_volume(const BSplineVolume& vol, double u, double v, double t) {
    const auto nu = oracle::all_basis(synth::to_vec(vol.kv(0)), vol.kv(0).degree(), u);
    const auto nv = oracle::all_basis(synth::to_vec(vol.kv(1)), vol.kv(1).degree(), v);
    const auto nt = oracle::all_basis(synth::to_vec(vol.kv(2)), vol.kv(2).degree(), t);
    const auto d = vol.dims();
    double s = 0.0;
    for (int i = 0; i < d[0]; ++i)
        for (int j = 0; j < d[1]; ++j)
            for (int k = 0; k < d[2]; ++k)
                s += vol.control(i, j, k)[0] * nu[static_cast<std::size_t>(i)] * nv[static_cast<std::size_t>(j)] *
                     nt[static_cast<std::size_t>(k)];
    return s;
}

}  // namespace

TEST(EvalVolume, ConstantAndCorner) {
    std::array<KnotVector, 3> kvs{KnotVector::uniform(3, 5), KnotVector::uniform(2, 4), KnotVector::uniform(3, 6)};
    BSplineVolume c(kvs, 1, std::vector<double>(5 * 4 * 6, -2.25));
    EXPECT_NEAR(eval_volume(c, 0.3, 0.9, 0.1)(0), -2.25, 1e-14);

    std::vector<double> ctrl(5 * 4 * 6);
    std::iota(ctrl.begin(), ctrl.end(), 1.0);
    BSplineVolume r(kvs, 1, ctrl);
    EXPECT_DOUBLE_EQ(eval_volume(r, 0, 0, 0)(0), 1.0);
    EXPECT_DOUBLE_EQ(eval_volume(r, 1, 1, 1)(0), ctrl.back());
    EXPECT_THROW(eval_volume(r, 0.5, -0.1, 0.5), DomainError);
}

TEST(EvalVolume, MatchesNaiveTripleSum) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uu(0, 1), val(-1, 1);
    std::array<KnotVector, 3> kvs{synth::random_kv(3, 5, rng), synth::random_kv(3, 5, rng),
                                  synth::random_kv(3, 5, rng)};
    std::vector<double> ctrl(125);
    for (auto& c : ctrl) c = val(rng);
    BSplineVolume vol(kvs, 1, ctrl);
    for (int i = 0; i < 50; ++i) {
        const double u = uu(rng), v = uu(rng), t = uu(rng);
        EXPECT_NEAR(eval_volume(vol, u, v, t)(0), naive_volume(vol, u, v, t), 1e-12);
    }
}

TEST(AveragingKnots, SpecExamples) {
    std::vector<double> p4{0, 1.0 / 3, 2.0 / 3, 1};
    EXPECT_EQ(synth::to_vec(averaging_knots(p4, 3)), (std::vector<double>{0, 0, 0, 0, 1, 1, 1, 1}));

    std::vector<double> p5{0, .25, .5, .75, 1};
    auto kv = averaging_knots(p5, 3);
    ASSERT_EQ(kv.size(), 9u);
    EXPECT_NEAR(kv[4], 0.5, 1e-15);

    std::vector<double> p3{0, 0.5, 1};
    EXPECT_THROW(averaging_knots(p3, 3), SizeError);
}

TEST(AveragingKnots, MatchesFormula) {
    std::vector<double> params;
    for (int i = 0; i <= 10; ++i) params.push_back(i / 10.0);
    auto kv = averaging_knots(params, 2);
    ASSERT_EQ(kv.control_count(), 11);
    for (int j = 1; j <= 10 - 2; ++j) {
        const double expect = (params[static_cast<std::size_t>(j)] + params[static_cast<std::size_t>(j + 1)]) / 2.0;
        EXPECT_NEAR(kv[static_cast<std::size_t>(j + 2)], expect, 1e-15);
    }
}

TEST(ApproximationKnots, FewerControlsStaysValid) {
    std::vector<double> params;
    for (int i = 0; i < 30; ++i) params.push_back(std::pow(i / 29.0, 1.5));
    auto kv = approximation_knots(params, 3, 12);
    EXPECT_EQ(kv.control_count(), 12);
    EXPECT_EQ(approximation_knots(params, 3, 30), averaging_knots(params, 3));
}

TEST(InsertKnot, PreservesCurve) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> uu(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        auto kv = synth::random_kv(3, 8, rng);
        BSplineCurve c(kv, Eigen::MatrixXd::Random(8, 2));
        const double uh = uu(rng);
        auto c2 = insert_knot(c, uh);
        EXPECT_EQ(c2.controls.rows(), 9);
        EXPECT_EQ(c2.kv.size(), kv.size() + 1);
        for (int i = 0; i < 200; ++i) {
            const double u = uu(rng);
            EXPECT_LE((eval_curve(c, u) - eval_curve(c2, u)).cwiseAbs().maxCoeff(), 1e-12);
        }
    }
}

TEST(InsertKnot, LocalityAndBoehmFormula) {
    KnotVector kv(3, {0, 0, 0, 0, 0.25, 0.5, 0.75, 1, 1, 1, 1});
    Eigen::MatrixXd P(7, 1);
    P << 1, 4, -2, 3, 0.5, 7, 2;
    BSplineCurve c(kv, P);
    const double uh = 0.6;
    auto c2 = insert_knot(c, uh);
    const int k = 5, p = 3;  // 0.5 <= 0.6 < 0.75
    const auto U = synth::to_vec(kv);
    for (int i = 0; i <= k - p; ++i) EXPECT_EQ(c2.controls(i, 0), P(i, 0));
    for (int i = k + 1; i <= 7; ++i) EXPECT_EQ(c2.controls(i, 0), P(i - 1, 0));
    for (int i = k - p + 1; i <= k; ++i) {
        const double a = (uh - U[static_cast<std::size_t>(i)]) /
                         (U[static_cast<std::size_t>(i + p)] - U[static_cast<std::size_t>(i)]);
        EXPECT_NEAR(c2.controls(i, 0), a * P(i, 0) + (1 - a) * P(i - 1, 0), 1e-15);
    }
}

TEST(InsertKnot, MultiplicityOverflow) {
    KnotVector kv(2, {0, 0, 0, 0.5, 0.5, 1, 1, 1});
    BSplineCurve c(kv, Eigen::MatrixXd::Zero(5, 1));
    EXPECT_THROW(insert_knot(c, 0.5), RefinementError);
}
