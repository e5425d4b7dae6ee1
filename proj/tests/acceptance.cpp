// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
// Criteria 4-8 compare the library against independent oracles written here
// (Eigen for linear algebra, naive loops for everything else). Criteria 2 and 9
// run the full pipeline in scratch directories.

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rangeface/config.hpp"
#include "rangeface/evalkit.hpp"
#include "rangeface/facegen.hpp"
#include "rangeface/fusion.hpp"
#include "rangeface/matcher.hpp"
#include "rangeface/normalize.hpp"
#include "rangeface/pipeline.hpp"
#include "rangeface/subspace.hpp"
#include "test_support.hpp"

namespace {

using namespace rangeface;
namespace fs = std::filesystem;
using Vectors = std::vector<std::vector<double>>;

struct Outcome {
    bool pass = true;
    std::string detail;
};

/// Collects the first few failure messages of one criterion.
struct Check {
    bool ok = true;
    std::vector<std::string> notes;

    void expect(bool cond, const std::string& what) {
        if (cond) return;
        ok = false;
        if (notes.size() < 3) notes.push_back(what);
    }
    Outcome outcome(std::string summary) const {
        if (!ok) {
            for (const auto& n : notes) summary += "; " + n;
        }
        return {ok, summary};
    }
};

std::string num(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    return testing::random_vector(rng, n, lo, hi);
}

ScoreMatrix square(std::mt19937_64& rng, std::size_t n, double lo, double hi, bool shuffle_probes) {
    ScoreMatrix m;
    for (std::size_t i = 0; i < n; ++i) {
        m.gallery_ids.push_back("s" + std::to_string(i));
        m.probe_ids.push_back("s" + std::to_string(i));
    }
    m.values = uniform(rng, n * n, lo, hi);
    if (shuffle_probes) std::shuffle(m.probe_ids.begin(), m.probe_ids.end(), rng);
    return m;
}

/// Rank-1 rate by direct count: a probe is a hit when no impostor scores
/// strictly better than its true match.
double rank1_oracle(const ScoreMatrix& m) {
    std::size_t hits = 0;
    for (std::size_t p = 0; p < m.cols(); ++p) {
        std::size_t g_true = m.rows();
        for (std::size_t g = 0; g < m.rows(); ++g)
            if (m.gallery_ids[g] == m.probe_ids[p]) g_true = g;
        const double s = m(g_true, p);
        bool beaten = false;
        for (std::size_t g = 0; g < m.rows(); ++g) {
            if (g == g_true) continue;
            beaten |= m.polarity == Polarity::distance ? m(g, p) < s : m(g, p) > s;
        }
        hits += !beaten;
    }
    return static_cast<double>(hits) / static_cast<double>(m.cols());
}

// ---------------------------------------------------------------------------
// 2. end-to-end synthetic benchmark

Outcome benchmark() {
    testing::TempDir dir("accept_bench");
    Config c;  // 100 subjects, rotation <= 10 deg, depth noise 0.005 d, 2 voids
    const pipeline::Layout l{dir.path()};
    const auto t0 = std::chrono::steady_clock::now();
    pipeline::run_all(c, l);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto rate = [&](const std::string& name) { return rank1_oracle(parse_scores(textio::read_file(l.scores() / (name + ".csv")))); };
    const double shape = rate("shape_l1"), color = rate("color_l1"), image = rate("image_l1");
    const double fused = rate(pipeline::fused_name(Metric::l1, Normalization::zscore, FusionRule::mean));
    Check ck;
    ck.expect(shape >= 0.90, "shape rank-1 below 0.90");
    ck.expect(color >= 0.90, "color rank-1 below 0.90");
    ck.expect(fused >= std::max(shape, color) - 0.02, "fusion below best single modality - 0.02");
    ck.expect(secs < 120.0, "runtime over 120 s");
    return ck.outcome("100 subjects, L1 rank-1 shape " + num(shape) + ", color " + num(color) + ", image " + num(image) +
                      ", zscore mean fusion " + num(fused) + ", " + num(std::round(secs * 10) / 10) + " s");
}

// ---------------------------------------------------------------------------
// 3. alignment round trip

Outcome alignment_round_trip() {
    std::mt19937_64 rng(303);
    Check ck;
    GridConfig cfg;
    cfg.resolution = 64;
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const SubjectScan subject = synth_subject(random_subject_params(1000 + static_cast<std::uint64_t>(trial)));
        CaptureParams cap;
        cap.seed = static_cast<std::uint64_t>(trial);
        cap.max_rotation_deg = 10;
        cap.max_translation = 30;
        cap.subsample_fraction = 0.8;
        cap.void_count = 2;
        cap.depth_noise = 0.005;
        const SubjectRecord rec = synth_capture(subject, "s", PoseTag::gallery, cap).record;

        std::uniform_real_distribution<double> u(-1, 1), angle(0, 30.0 * std::numbers::pi / 180.0);
        Eigen::Vector3d axis(u(rng), u(rng), u(rng));
        axis.normalize();
        const Eigen::Matrix3d r = Eigen::AngleAxisd(angle(rng), axis).toRotationMatrix();
        RigidTransform t;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) t.rotation(i, j) = r(i, j);
        t.translation = {50 * u(rng), 50 * u(rng), 50 * u(rng)};

        SubjectRecord moved = rec;
        moved.mesh = transform_mesh(rec.mesh, t, FrameTag::body);
        moved.landmarks = transform_landmarks(rec.landmarks, t);
        const RangeGrid a = normalize_scan(rec, cfg, false);
        const RangeGrid b = normalize_scan(moved, cfg, false);
        double sum = 0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < a.depth.size(); ++i) {
            if (a.void_mask[i] || b.void_mask[i]) continue;
            sum += std::abs(a.depth[i] - b.depth[i]);
            ++n;
        }
        const double mad = n ? sum / static_cast<double>(n) : std::numeric_limits<double>::infinity();
        worst = std::max(worst, mad / a.d);
        ck.expect(mad <= 1e-3 * a.d, "trial " + std::to_string(trial) + " mean abs depth difference " + num(mad / a.d) + " d");
    }
    return ck.outcome("50 rigid motions up to 30 deg, worst mean abs depth difference " + num(worst) + " d");
}

// ---------------------------------------------------------------------------
// 4. Gram trick vs direct covariance

Outcome gram_oracle() {
    std::mt19937_64 rng(404);
    Check ck;
    double worst_rel = 0, worst_angle = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t dim = 2 + rng() % 19, k = 2 + rng() % 9;
        Vectors data;
        for (std::size_t i = 0; i < k; ++i) data.push_back(uniform(rng, dim, -3, 3));
        const Subspace s = train(data);

        Eigen::MatrixXd x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < dim; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i][j];
        const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
        const Eigen::MatrixXd cov = c.transpose() * c / static_cast<double>(k - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        const Eigen::VectorXd values = es.eigenvalues().reverse();
        const Eigen::MatrixXd vectors = es.eigenvectors().rowwise().reverse();

        const std::size_t rank = std::min(k - 1, dim);
        ck.expect(s.components() == rank, "trial " + std::to_string(trial) + " kept " + std::to_string(s.components()) +
                                              " components, expected " + std::to_string(rank));
        if (s.components() != rank) continue;
        for (std::size_t i = 0; i < rank; ++i) {
            const double ref = values(static_cast<Eigen::Index>(i));
            const double rel = std::abs(s.eigenvalues[i] - ref) / ref;
            worst_rel = std::max(worst_rel, rel);
            ck.expect(rel <= 1e-8, "eigenvalue relative error " + num(rel));
        }
        Eigen::MatrixXd ours(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(rank));
        for (std::size_t j = 0; j < rank; ++j)
            for (std::size_t i = 0; i < dim; ++i) ours(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s.basis[j][i];
        const Eigen::MatrixXd ref = vectors.leftCols(static_cast<Eigen::Index>(rank));
        const Eigen::MatrixXd resid = ours - ref * (ref.transpose() * ours);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(resid);
        const double angle = std::asin(std::min(1.0, svd.singularValues()(0)));
        worst_angle = std::max(worst_angle, angle);
        ck.expect(angle < 1e-6, "principal angle " + num(angle));
    }
    return ck.outcome("10 instances, worst eigenvalue relative error " + num(worst_rel) + ", worst principal angle " +
                      num(worst_angle));
}

// ---------------------------------------------------------------------------
// 5. distance oracles

Outcome distance_oracles() {
    std::mt19937_64 rng(505);
    Check ck;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 12;
        const auto a = uniform(rng, n, -10, 10), b = uniform(rng, n, -10, 10), lambda = uniform(rng, n, 0.01, 50);
        double l1 = 0, w = 0;
        for (std::size_t i = 0; i < n; ++i) {
            l1 += std::abs(a[i] - b[i]);
            w -= a[i] * b[i] / std::sqrt(lambda[i]);
        }
        ck.expect(std::abs(dist_l1(a, b) - l1) <= 1e-12, "L1 differs from loop oracle");
        ck.expect(std::abs(dist_mahalanobis(a, b, lambda) - w) <= 1e-12, "weighted distance differs from loop oracle");
    }
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t dim = 1 + rng() % 6;
        std::vector<FeatureVector> g(5), p(7);
        for (std::size_t i = 0; i < 5; ++i) g[i] = {uniform(rng, dim, -4, 4), "g" + std::to_string(i), PoseTag::gallery};
        for (std::size_t i = 0; i < 7; ++i) p[i] = {uniform(rng, dim, -4, 4), "p" + std::to_string(i), PoseTag::probe};
        const auto lambda = uniform(rng, dim, 0.5, 9);
        const ScoreMatrix l1 = score_matrix(g, p, Metric::l1);
        const ScoreMatrix mh = score_matrix(g, p, Metric::mahalanobis, lambda);
        ck.expect(l1.rows() == 5 && l1.cols() == 7, "score matrix is not 5 x 7");
        for (std::size_t r = 0; r < 5; ++r)
            for (std::size_t c = 0; c < 7; ++c) {
                ck.expect(l1(r, c) == dist_l1(g[r].coefficients, p[c].coefficients), "L1 cell differs from double loop");
                ck.expect(mh(r, c) == dist_mahalanobis(g[r].coefficients, p[c].coefficients, lambda),
                          "weighted cell differs from double loop");
            }
    }
    return ck.outcome("100 random pairs within 1e-12, 10 random 5 x 7 score matrices exact");
}

// ---------------------------------------------------------------------------
// 6. normalization invariants

Outcome normalization_invariants() {
    std::mt19937_64 rng(606);
    Check ck;
    for (int trial = 0; trial < 20; ++trial) {
        const ScoreMatrix raw = square(rng, 3 + rng() % 15, -50, 80, true);
        const ScoreMatrix mm = normalize_scores(raw, Normalization::minmax);
        ck.expect(*std::min_element(mm.values.begin(), mm.values.end()) == 0.0, "minmax minimum is not 0");
        ck.expect(*std::max_element(mm.values.begin(), mm.values.end()) == 1.0, "minmax maximum is not 1");
        const ScoreMatrix zs = normalize_scores(raw, Normalization::zscore);
        double mean = 0;
        for (double v : zs.values) mean += v;
        mean /= static_cast<double>(zs.values.size());
        double ss = 0;
        for (double v : zs.values) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(zs.values.size() - 1));
        ck.expect(std::abs(mean) <= 1e-9, "zscore mean " + num(mean));
        ck.expect(std::abs(sd - 1.0) <= 1e-9, "zscore sample std " + num(sd));
        const CmcCurve base = cmc(raw);
        ck.expect(cmc(mm) == base, "minmax changes the CMC");
        ck.expect(cmc(zs) == base, "zscore changes the CMC");
    }
    return ck.outcome("20 random matrices: minmax spans [0, 1], zscore mean 0 and std 1, CMC unchanged");
}

// ---------------------------------------------------------------------------
// 7. fusion rules

Outcome fusion_oracles() {
    std::mt19937_64 rng(707);
    Check ck;
    FuseOptions signed_ok;
    signed_ok.allow_signed_product = true;
    for (int trial = 0; trial < 10; ++trial)
        for (Normalization n : {Normalization::minmax, Normalization::zscore}) {
            const std::size_t size = 2 + rng() % 8;
            const ScoreMatrix a = normalize_scores(square(rng, size, 0, 10, false), n);
            const ScoreMatrix b = normalize_scores(square(rng, size, 0, 10, false), n);
            for (FusionRule r : {FusionRule::mean, FusionRule::min, FusionRule::max, FusionRule::product}) {
                const ScoreMatrix f = fuse_scores(a, b, r, signed_ok);
                for (std::size_t i = 0; i < f.values.size(); ++i) {
                    const double x = a.values[i], y = b.values[i];
                    double expect = 0;
                    switch (r) {
                        case FusionRule::mean: expect = (x + y) / 2; break;
                        case FusionRule::min: expect = x < y ? x : y; break;
                        case FusionRule::max: expect = x > y ? x : y; break;
                        case FusionRule::product: expect = x * y; break;
                    }
                    ck.expect(f.values[i] == expect, std::string(to_string(r)) + " rule differs from element-wise oracle");
                }
            }
        }
    const ScoreMatrix za = normalize_scores(square(rng, 4, 0, 10, false), Normalization::zscore);
    const ScoreMatrix zb = normalize_scores(square(rng, 4, 0, 10, false), Normalization::zscore);
    bool refused = false;
    try {
        fuse_scores(za, zb, FusionRule::product);
    } catch (const FusionError& e) {
        refused = std::string(e.what()).find("sign-ambiguous") != std::string::npos && e.code() == ExitCode::data;
    }
    ck.expect(refused, "product on zscore was not refused with the sign-ambiguous error");
    return ck.outcome("4 rules x 2 normalizations x 10 instances exact; product on zscore refused without override");
}

// ---------------------------------------------------------------------------
// 8. CMC and ROC

std::vector<RocPoint> roc_oracle(const ScoreMatrix& m) {
    std::set<double> thresholds(m.values.begin(), m.values.end());
    std::vector<RocPoint> pts{{-std::numeric_limits<double>::infinity(), 0, 0}};
    for (double t : thresholds) {
        double ng = 0, ni = 0, ag = 0, ai = 0;
        for (std::size_t g = 0; g < m.rows(); ++g)
            for (std::size_t p = 0; p < m.cols(); ++p) {
                const bool genuine = m.gallery_ids[g] == m.probe_ids[p];
                (genuine ? ng : ni) += 1;
                if (m(g, p) <= t) (genuine ? ag : ai) += 1;
            }
        const RocPoint pt{t, ai / ni, ag / ng};
        if (pt.far == pts.back().far && pt.tar == pts.back().tar) continue;
        pts.push_back(pt);
    }
    return pts;
}

Outcome curve_correctness() {
    std::mt19937_64 rng(808);
    Check ck;
    for (int trial = 0; trial < 20; ++trial) {
        ScoreMatrix m = square(rng, 20, 0, 1, true);
        if (trial % 2) {
            for (auto& v : m.values) v = std::round(v * 8) / 8;  // force ties
        }
        const CmcCurve c = cmc(m);
        ck.expect(std::is_sorted(c.rates.begin(), c.rates.end()), "CMC decreases");
        ck.expect(c.rates.size() == 20 && c.rates.back() == 1.0, "CMC(G) is not 1");
        ck.expect(c.rank1() == rank1_oracle(m), "rank-1 differs from direct count");
        ck.expect(roc(m).points == roc_oracle(m), "ROC differs from threshold enumeration");
    }
    ScoreMatrix hand;
    hand.gallery_ids = hand.probe_ids = {"a", "b"};
    hand.values = {0.1, 0.2, 0.4, 0.3};  // genuine {0.1, 0.3}, impostor {0.2, 0.4}
    const RocPoint p = operating_point(hand, 0.25);
    ck.expect(p.far == 0.5 && p.tar == 0.5, "hand point is (" + num(p.far) + ", " + num(p.tar) + ")");
    const auto pts = roc(hand).points;
    ck.expect(std::any_of(pts.begin(), pts.end(), [](const RocPoint& q) { return q.far == 0.5 && q.tar == 0.5; }),
              "(0.5, 0.5) missing from the ROC");
    return ck.outcome("20 random 20 x 20 matrices match oracles; hand point (0.5, 0.5) at threshold 0.25");
}

// ---------------------------------------------------------------------------
// 9. determinism

Outcome determinism() {
    testing::TempDir a("accept_det_a"), b("accept_det_b"), c("accept_det_c");
    Config cfg;
    cfg.synth.subjects = 20;
    cfg.synth.seed = 99;
    {
        testing::EnvGuard env("RANGEFACE_THREADS", "1");
        pipeline::run_all(cfg, pipeline::Layout{a.path()});
        pipeline::run_all(cfg, pipeline::Layout{b.path()});
    }
    {
        testing::EnvGuard env("RANGEFACE_THREADS", "4");
        pipeline::run_all(cfg, pipeline::Layout{c.path()});
    }
    const auto sa = testing::snapshot(a.path()), sb = testing::snapshot(b.path()), sc = testing::snapshot(c.path());
    Check ck;
    ck.expect(sa == sb, "two runs differ");
    ck.expect(sa == sc, "1 and 4 threads differ");
    std::map<std::string, int> kinds;
    for (const auto& [rel, bytes] : sa) ++kinds[rel.substr(0, rel.find('/'))];
    for (const char* k : {"data", "grids", "models", "scores", "report"}) ck.expect(kinds[k] > 0, std::string("no ") + k + " artifacts");
    return ck.outcome(std::to_string(sa.size()) + " artifacts byte-identical across two runs and 1 vs 4 threads");
}

}  // namespace

int main() {
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {2, benchmark},          {3, alignment_round_trip}, {4, gram_oracle},       {5, distance_oracles},
        {6, normalization_invariants}, {7, fusion_oracles},  {8, curve_correctness}, {9, determinism},
    };
    int failed = 0;
    for (const auto& [id, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
