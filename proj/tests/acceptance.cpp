// Acceptance checks: one PASS/FAIL line per criterion. Arguments select criteria by number.
#include "ball_family.hpp"
#include "fixtures.hpp"

#include <ucvol/pipeline.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>

using namespace ucvol;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string format(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<PointPair> pairs_of(const std::string& s) {
    const auto d = ACRDescriptor::parse(s);
    return {d.pairs().begin(), d.pairs().end()};
}

std::set<CubeKey> key_set(const ACRSampleResult& r) {
    std::set<CubeKey> out;
    for (const auto& s : r.samples) out.insert(s.key);
    return out;
}

// Two triangles with 2 Å radii and a 0.3 Å contact band.
struct Triangles {
    std::shared_ptr<const PointSet> A = fixtures::make_set("A", {Vec3(0, 0, 0), Vec3(6.5, 0, 0), Vec3(1.75, 4.5, 0)}, 2.0);
    std::shared_ptr<const PointSet> B =
        fixtures::make_set("B", {Vec3(0, 0, 0), Vec3(5.5, 1.25, 0), Vec3(1.5, 4.25, 1.0)}, 2.0);
    ConstraintSystem sys;
    GridSpec coarse{2.0, std::numbers::pi / 9, {0.013, 0.029, 0.007, 0.011, 0.017, 0.023}};
    Triangles() {
        sys.activeLower = {1.0, 0.0};
        sys.activeUpper = {1.0, 0.3};
        sys.collision = {1.0, 0.0};
    }
    [[nodiscard]] SamplerOptions options(Variant v, double cayleyStep) const {
        SamplerOptions o;
        o.variant = v;
        o.grid = coarse;
        o.cayleyStep = cayleyStep;
        return o;
    }
};

// 1. Cube counts against a dense Cartesian scan.
Verdict oracle_volume() {
    const Triangles in;
    struct Case {
        const char* acr;
        std::array<int, 6> ratio;
        double cayleyStep;
    };
    const std::array<Case, 3> cases{{{"1-1;2-2", {8, 8, 8, 8, 8, 8}, 0.25},
                                     {"1-2;3-1", {8, 8, 8, 8, 8, 8}, 0.25},
                                     {"1-1", {8, 8, 8, 4, 4, 4}, 0.5}}};
    Verdict v{true, ""};
    double sampling = 0.0;
    for (const auto& c : cases) {
        const auto acr = ACRDescriptor::parse(c.acr);
        const GridSpec fine = nested_grid(in.coarse, c.ratio);
        const auto t0 = std::chrono::steady_clock::now();
        CubeDeriver derived(fine, in.coarse);
        baseline_scan(in.A, in.B, in.sys, acr, fine, 0, BaselineMembership::Containing,
                      [&](const ACRDescriptor&, const CubeKey& k) { derived.add(k); });
        const double scan = seconds_since(t0);
        const auto r = sample_acr(in.A, in.B, acr, in.sys, in.options(Variant::Hybrid, c.cayleyStep));
        sampling += r.seconds;
        std::unordered_set<CubeKey, CubeKeyHash> uc;
        for (const auto& s : r.samples) uc.insert(s.key);
        const double ratio = static_cast<double>(uc.size()) / static_cast<double>(derived.cubes().size());
        const double j = jaccard(uc, derived.cubes());
        v.pass = v.pass && std::abs(ratio - 1.0) <= 0.10 && j >= 0.85;
        v.detail += format("%s: %zu/%zu cubes ratio %.3f J %.3f (scan %.0fs, sampler %.1fs); ", c.acr, uc.size(),
                           derived.cubes().size(), ratio, j, scan, r.seconds);
    }
    v.pass = v.pass && sampling < 300.0;
    v.detail += format("sampler total %.1fs", sampling);
    return v;
}

// 2. Hybrid finds every Simplicial cube; Basis needs q! fewer solves per cube.
Verdict variant_inclusion() {
    const Triangles in;
    Verdict v{true, ""};
    for (const char* s : {"1-1;2-2", "1-2;3-1", "1-1;2-2;3-3", "1-2;2-3;3-1"}) {
        const auto acr = ACRDescriptor::parse(s);
        const auto simplicial = sample_acr(in.A, in.B, acr, in.sys, in.options(Variant::Simplicial, 0.5));
        const auto hybrid = sample_acr(in.A, in.B, acr, in.sys, in.options(Variant::Hybrid, 0.5));
        const auto hs = key_set(hybrid), ss = key_set(simplicial);
        const bool contains = std::includes(hs.begin(), hs.end(), ss.begin(), ss.end());
        v.pass = v.pass && contains && !ss.empty();
        v.detail += format("%s: simplicial %zu (%.1fs) hybrid %zu (%.1fs)%s; ", s, ss.size(), simplicial.seconds,
                           hs.size(), hybrid.seconds, contains ? "" : " MISSING CUBES");
    }
    // per-cube solve counts on cubes the q = 3 region actually visits
    const auto acr = ACRDescriptor::parse("1-1;2-2;3-3");
    const AcrSampler basis(in.A, in.B, acr, in.sys, in.options(Variant::Basis, 0.5));
    const AcrSampler simplicial(in.A, in.B, acr, in.sys, in.options(Variant::Simplicial, 0.5));
    const auto visited = simplicial.run();
    ACRSampleResult rb, rs;
    std::size_t cubes = 0;
    for (const auto& s : visited.samples) {
        if (cubes == 50) break;
        (void)basis.process_cube(s.key, 0, s.flip, rb);
        (void)simplicial.process_cube(s.key, 0, s.flip, rs);
        ++cubes;
    }
    const double ratio = static_cast<double>(rs.counters.solves) / static_cast<double>(std::max<std::size_t>(1, rb.counters.solves));
    v.pass = v.pass && cubes > 0 && rb.counters.solves * 6 <= rs.counters.solves;
    v.detail += format("q=3 solves over %zu cubes: basis %zu simplicial %zu (x%.1f)", cubes, rb.counters.solves,
                       rs.counters.solves, ratio);
    return v;
}

// 3. forward(realize(c)) == c, exact flip round trip and tree edge lengths.
Verdict cayley_round_trip() {
    ConstraintSystem sys;
    sys.activeLower = {1.0, 0.0};
    sys.activeUpper = {1.0, 0.4};
    sys.collision = sys.activeLower;
    struct Case {
        std::shared_ptr<const PointSet> A, B;
        const char* acr;
    };
    const std::array<Case, 4> cases{{{fixtures::tri_a(), fixtures::tri_b(), "1-1"},
                                     {fixtures::tri_a(), fixtures::tri_b(), "1-1;2-3"},
                                     {fixtures::tri_a(), fixtures::tri_b(), "1-2;2-1;3-3"},
                                     {fixtures::tet_a(), fixtures::tet_b(), "1-1;1-2;1-3;2-1;2-2;3-1"}}};
    Verdict v{true, ""};
    std::mt19937_64 rng(2024);
    for (const auto& c : cases) {
        const auto g = std::make_shared<const ActiveConstraintGraph>(build_acg(c.A, c.B, pairs_of(c.acr), sys));
        const auto t = find_complete_3tree(g);
        double worstMap = 0.0, worstEdge = 0.0, worstResidual = 0.0;
        std::size_t flipMismatch = 0, unrealized = 0;
        for (int done = 0; done < 1000;) {
            const Pose pose = fixtures::random_pose(rng, 2.5);
            const auto f = try_flip_of_positions(acg_positions(*g, pose), t);
            if (!f) continue;
            ++done;
            const CayleyPoint cp = forward_map(pose, t);
            const auto r = try_realize(cp, t, *f);
            if (!r) {
                ++unrealized;
                continue;
            }
            const Pose back = r->pose();
            const CayleyPoint again = forward_map(back, t);
            for (std::size_t i = 0; i < 6; ++i) worstMap = std::max(worstMap, std::abs(again.coords[i] - cp.coords[i]));
            flipMismatch += !(flip_of(back, t) == *f);
            const auto pos = acg_positions(*g, back);
            for (const auto& e : t.edges)
                worstEdge = std::max(worstEdge, std::abs((pos[e.u] - pos[e.v]).norm() - t.edge_length(e, cp)));
            worstResidual = std::max(worstResidual, r->residual);
        }
        const bool ok = unrealized == 0 && flipMismatch == 0 && worstMap <= 1e-9 && worstEdge <= 1e-9 && worstResidual <= 1e-9;
        v.pass = v.pass && ok;
        v.detail += format("%s: map %.1e edge %.1e residual %.1e flips %zu unrealized %zu; ", c.acr, worstMap, worstEdge,
                           worstResidual, flipMismatch, unrealized);
    }
    v.detail += "1000 points per tree";
    return v;
}

// 4. Slice intersection: interior targets solved, targets beyond the margin rejected.
Verdict slice_intersection() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> coord(-5.0, 5.0), unit(0.0, 1.0), sign(-1.0, 1.0);
    std::uniform_int_distribution<int> qd(1, 6);
    auto margin = [&] { return std::pow(10.0, -5.5 + 5.0 * unit(rng)); };  // 3e-6 .. 0.3
    double worst = 0.0;
    std::size_t missedInside = 0, acceptedOutside = 0, trials = 0;

    auto well_conditioned = [](const Eigen::MatrixXd& m) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        const auto s = svd.singularValues();
        return s(s.size() - 1) > 1e-3 * s(0);
    };

    while (trials < 10000) {
        const auto q = static_cast<std::size_t>(qd(rng));
        // simplex: q+1 images, target from barycentric weights
        std::vector<CayleyPoint> imgs(q + 1);
        Eigen::MatrixXd m(q + 1, q + 1);
        for (std::size_t j = 0; j <= q; ++j) {
            imgs[j].q = static_cast<int>(q);
            for (auto& x : imgs[j].coords) x = coord(rng);
            m(0, static_cast<Eigen::Index>(j)) = 1.0;
            for (std::size_t i = 0; i < q; ++i) m(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(j)) = imgs[j].coords[i];
        }
        // parallelepiped: centre plus q basis vectors
        CayleyPoint centre;
        centre.q = static_cast<int>(q);
        for (auto& x : centre.coords) x = coord(rng);
        std::vector<std::array<double, 6>> basis(q);
        Eigen::MatrixXd b(q, q);
        for (std::size_t j = 0; j < q; ++j)
            for (std::size_t k = 0; k < 6; ++k) {
                basis[j][k] = coord(rng);
                if (k < q) b(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = basis[j][k];
            }
        if (!well_conditioned(m) || !well_conditioned(b)) continue;
        ++trials;

        std::vector<double> lam(q + 1);
        double total = 0.0;
        for (auto& l : lam) total += (l = 0.01 + unit(rng));
        for (auto& l : lam) l /= total;
        std::vector<double> alpha(q);
        for (auto& a : alpha) a = sign(rng);

        auto simplex_target = [&](const std::vector<double>& w) {
            std::vector<double> t(q, 0.0);
            for (std::size_t i = 0; i < q; ++i)
                for (std::size_t j = 0; j <= q; ++j) t[i] += w[j] * imgs[j].coords[i];
            return t;
        };
        auto box_target = [&](const std::vector<double>& a) {
            std::vector<double> t(q);
            for (std::size_t i = 0; i < q; ++i) {
                t[i] = centre.coords[i];
                for (std::size_t j = 0; j < q; ++j) t[i] += a[j] * basis[j][i];
            }
            return t;
        };

        const auto st = simplex_target(lam);
        if (const auto hit = intersect_simplex_slice(imgs, st)) {
            double wsum = 0.0;
            for (std::size_t j = 0; j <= q; ++j) wsum += hit->weights[j];
            worst = std::max(worst, std::abs(wsum - 1.0));
            for (std::size_t i = 0; i < q; ++i) {
                double back = 0.0;
                for (std::size_t j = 0; j <= q; ++j) back += hit->weights[j] * imgs[j].coords[i];
                worst = std::max(worst, std::abs(back - st[i]));
            }
        } else {
            ++missedInside;
        }
        const auto bt = box_target(alpha);
        if (const auto hit = intersect_parallelepiped_slice(centre, basis, bt)) {
            for (std::size_t i = 0; i < q; ++i) {
                double back = centre.coords[i];
                for (std::size_t j = 0; j < q; ++j) back += hit->weights[j] * basis[j][i];
                worst = std::max(worst, std::abs(back - bt[i]));
            }
        } else {
            ++missedInside;
        }

        // outside: one weight pushed below zero, one coefficient beyond 1
        const std::size_t jo = static_cast<std::size_t>(rng() % (q + 1));
        auto out = lam;
        const double neg = margin();
        out[jo] = -neg;
        double rest = 0.0;
        for (std::size_t j = 0; j <= q; ++j)
            if (j != jo) rest += out[j];
        for (std::size_t j = 0; j <= q; ++j)
            if (j != jo) out[j] *= (1.0 + neg) / rest;
        acceptedOutside += intersect_simplex_slice(imgs, simplex_target(out)).has_value();
        auto aout = alpha;
        const std::size_t ao = static_cast<std::size_t>(rng() % q);
        aout[ao] = (alpha[ao] < 0 ? -1.0 : 1.0) * (1.0 + margin());
        acceptedOutside += intersect_parallelepiped_slice(centre, basis, box_target(aout)).has_value();
    }
    return {missedInside == 0 && acceptedOutside == 0 && worst <= 1e-10,
            format("%zu simplices + %zu parallelepipeds: worst residual %.1e, interior misses %zu, outside accepts %zu",
                   trials, trials, worst, missedInside, acceptedOutside)};
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += std::log(x[i]), my += std::log(y[i]);
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return sxy / sxx;
}

// 5. Peak frontier grows like counted^((D-1)/D) on balls.
Verdict frontier_scaling() {
    Verdict v{true, ""};
    auto fit = [&]<std::size_t D>(std::array<double, 4> radii) {
        std::vector<double> counted, peak;
        for (double r : radii) {
            const auto run = fixtures::run_ball<D>(r, FrontierOrder::MostProcessed);
            counted.push_back(static_cast<double>(run.counted));
            peak.push_back(static_cast<double>(run.peak));
        }
        const double slope = loglog_slope(counted, peak);
        const double want = static_cast<double>(D - 1) / static_cast<double>(D);
        v.pass = v.pass && std::abs(slope - want) <= 0.1;
        v.detail += format("D=%zu: counted %.0f..%.0f peak %.0f..%.0f slope %.3f (want %.3f); ", D, counted.front(),
                           counted.back(), peak.front(), peak.back(), slope, want);
    };
    fit.operator()<2>({8, 16, 32, 64});
    fit.operator()<3>({4, 8, 16, 32});
    return v;
}

// 6. Weighted basin volume against Horner evaluation in extended precision; flat shape.
Verdict weighted_volume() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> factor(0.5, 2.0), vol(0.0, 1000.0);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double b = i % 5 == 0 ? 1.068 : factor(rng);
        std::array<double, 5> levels{};
        for (auto& x : levels) x = vol(rng);
        long double horner = 0.0L;
        for (double x : levels) horner = horner * static_cast<long double>(b) + static_cast<long double>(x);
        const double got = weighted_basin_volume(levels, b);
        worst = std::max(worst, static_cast<double>(std::abs(static_cast<long double>(got) - horner) / horner));
    }
    const auto basin = basin_from_bottom(pairs_of("1-1;1-2;2-2;2-3;3-3;3-1"));
    const std::array<double, 5> perLevel{6, 15, 20, 15, 6};
    AcrVolumes samples;
    for (const auto& m : basin.members)
        if (!m.empty()) samples[m] = 1.0 / perLevel[static_cast<std::size_t>(m.level() - 1)];
    const std::vector<Basin> all{basin};
    const auto d = shape_distribution(samples, basin, all, {});
    double flatErr = 0.0;
    for (const auto& l : d.levels) flatErr = std::max(flatErr, std::abs(l.fraction - 0.2));
    return {worst <= 1e-14 && flatErr <= 1e-12,
            format("50 tuples: worst relative error %.1e; flat shape max |f - 0.2| = %.1e", worst, flatErr)};
}

std::size_t choose(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// 7. Basin structure and union against inclusion counts.
Verdict basin_structure() {
    const auto first = basin_from_bottom(pairs_of("1-1;1-2;2-2;2-3;3-3;3-1"));
    bool levels = first.members.size() == 64 && first.edges.size() == 192;
    std::string counts;
    for (int k = 0; k <= 6; ++k) {
        const auto n = first.at_level(k).size();
        levels = levels && n == choose(6, static_cast<std::size_t>(6 - k));
        counts += std::to_string(n) + (k < 6 ? "/" : "");
    }
    AcrVolumes unit;
    for (const auto& m : first.members) unit[m] = 1.0;
    const double f = 1.068;
    bool unions = true;
    std::string shared;
    // second bottoms sharing 5, 4 and 0 pairs with the first
    for (const char* other : {"1-1;1-2;2-2;2-3;3-3;2-1", "1-1;1-2;2-2;3-1;3-2;1-3", "1-3;2-1;3-2;1-4;4-1;4-4"}) {
        const auto second = basin_from_bottom(pairs_of(other));
        std::size_t s = 0;
        for (const auto& p : second.bottom.pairs()) s += first.bottom.contains(p);
        AcrVolumes vols = unit;
        for (const auto& m : second.members) vols[m] = 1.0;
        double expected = 0.0;
        for (int k = 1; k <= 5; ++k) {
            const auto q = static_cast<std::size_t>(6 - k);
            expected += std::pow(f, 5 - k) * static_cast<double>(2 * choose(6, q) - choose(s, q));
        }
        const std::vector<Basin> both{first, second};
        const double u = union_volume(both, vols, f);
        const std::array<double, 2> each{basin_volume(first, vols, f), basin_volume(second, vols, f)};
        const auto relU = relative_volumes(each, RelativeMode::Union, u);
        const auto relS = relative_volumes(each, RelativeMode::Sum);
        const bool ok = std::abs(u - expected) <= 1e-12 * expected && std::abs(relS[0] - 0.5) <= 1e-15 &&
                        std::abs(relU[0] - each[0] / expected) <= 1e-12 && (s == 0) == (std::abs(relU[0] - 0.5) <= 1e-12);
        unions = unions && ok;
        shared += format("shared %zu: union %.6f (hand %.6f); ", s, u, expected);
    }
    return {levels && unions, "levels " + counts + "; " + shared};
}

// 8. Hand-labelled trajectory under the three inner-bound rules.
Verdict mc_partitioning() {
    ConstraintSystem sys;
    sys.collision = {0.8, 0.0};
    sys.activeLower = {0.8, 0.0};
    sys.activeUpper = {1.0, 0.5};
    const auto A = fixtures::make_set("A", {Vec3(0, 0, 0), Vec3(0.5, 0, 0), Vec3(0, 0.7, 0), Vec3(20, 0, 0)}, 1.0);
    const auto B = fixtures::make_set("B", {Vec3(0, 0, 0), Vec3(0.6, 0, 0), Vec3(0, 0.4, 0), Vec3(-20, 0, 0)}, 1.0);
    const PoseClassifier classifier(A, B, sys);
    const double tau = 2.0 * std::numbers::pi;
    struct Line {
        std::array<double, 6> pose;
        const char* mc1;
        const char* mc2;
        const char* mc3;
    };
    // "C" collision, "N" no contact
    const char* near6 = "1-1;1-2;1-3;2-1;2-2;3-3";
    const std::array<Line, 20> lines{{
        {{40, 0, 1.65, 0, 0, 0}, "4-4", "4-4", "4-4"},
        {{40, 0, 1.85, 0, 0, 0}, "4-4", "4-4", "4-4"},
        {{40, 0, 2.3, 0, 0, 0}, "4-4", "4-4", "4-4"},
        {{40, 0, 2.6, 0, 0, 0}, "N", "N", "N"},
        {{40, 0, 1.5, 0, 0, 0}, "C", "C", "C"},
        {{0, 0, 1.65, 0, 0, 0}, "1-1;1-3;2-2;3-3", near6, near6},
        {{0.05, 0.02, 1.65, 0, 0, 0}, "1-1;2-2;3-3", "1-1;1-3;2-1;2-2;2-3;3-3", "1-1;1-3;2-1;2-2;2-3;3-3"},
        {{0.3, 0.3, 1.62, 0, 0, 0}, "1-1;2-1;2-2;3-1;3-3", "1-1;2-1;2-2;2-3;3-1;3-3", "1-1;2-1;2-2;2-3;3-1;3-3"},
        {{0.1, 0.05, 1.8, 0, 0, 0}, "1-1", "1-1;1-3;2-1;2-2;2-3;3-3", "1-1;1-3;2-1;2-2;2-3;3-3"},
        {{0.43, -0.13, 1.83, 0, 0, 0}, "2-1", "1-1;1-3;2-1;2-2;2-3;3-3", "1-1;1-3;2-1;2-2;2-3;3-3"},
        {{1.5, 0, 1.0, 0, 0, 0}, "C", "C", "C"},
        {{2.0, 0.3, 0.5, 0, 0, 0}, "2-1", "2-1;2-3", "1-1;1-3;2-1;2-3;3-1;3-3"},
        {{2.68, 0.05, 0.1, 0, 0, 0}, "2-1", "2-1", "1-1;1-3;2-1;2-3;3-1;3-3"},
        {{0, 2.2, 0.3, 0, 0, 0}, "C", "C", "C"},
        {{0.21, 0.33, 1.93, 0, 0, 0}, "3-3", "1-1;2-1;2-2;3-1;3-3", "1-1;1-3;2-1;2-2;3-1;3-3"},
        {{0, 0, 3.0, 0, 0, 0}, "N", "N", "N"},
        {{1.8, 1.0, 0.5, 0, 0, 0}, "2-1", "2-1;2-3;3-1;3-3", "1-1;2-1;2-2;2-3;3-1;3-3"},
        {{0, 0, 0.8, 0, 0, 0}, "C", "C", "C"},
        {{40, 0, 1.65, tau, tau, tau}, "4-4", "4-4", "4-4"},
        {{40, 0.3, 1.64, 0, 0, 0}, "4-4", "4-4", "4-4"},
    }};
    const GridSpec grid(1.0, std::numbers::pi / 9);
    std::size_t wrong = 0, unnested = 0;
    std::string firstWrong;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::array<Pose, 1> one{Pose{lines[i].pose}};
        std::vector<ACRDescriptor> got;
        const std::array<std::pair<InnerRule, const char*>, 3> rules{
            {{InnerRule::MC1, lines[i].mc1}, {InnerRule::MC2, lines[i].mc2}, {InnerRule::MC3, lines[i].mc3}}};
        for (const auto& [rule, want] : rules) {
            const auto atlas = ingest_trajectory(one, classifier, rule, grid);
            std::string label;
            if (atlas.rejectedCollision) label = "C";
            else if (atlas.rejectedNoContact) label = "N";
            else if (atlas.entries.size() == 1) {
                got.push_back(atlas.entries.begin()->first);
                label = got.back().to_string();
            }
            const bool ok = std::string(want).size() == 1 ? label == want
                                                          : label.size() > 1 && ACRDescriptor::parse(label) == ACRDescriptor::parse(want);
            if (!ok) {
                ++wrong;
                if (firstWrong.empty())
                    firstWrong = format(" (line %zu %s: got %s want %s)", i + 1, to_string(rule), label.c_str(), want);
            }
        }
        if (got.size() == 3 && !(got[0].subset_of(got[1]) && got[1].subset_of(got[2]))) ++unnested;
    }
    std::vector<Pose> traj;
    for (const auto& l : lines) traj.push_back(Pose{l.pose});
    const auto mc2 = ingest_trajectory(traj, classifier, InnerRule::MC2, grid);
    const bool totals = mc2.accepted() == 14 && mc2.rejectedCollision == 4 && mc2.rejectedNoContact == 2;
    return {wrong == 0 && unnested == 0 && totals,
            format("20 lines x 3 rules: %zu mismatches%s, %zu nesting violations; MC2 accepted %zu collision %zu no-contact %zu",
                   wrong, firstWrong.c_str(), unnested, mc2.accepted(), mc2.rejectedCollision, mc2.rejectedNoContact)};
}

Pose pose_at(const GridSpec& g, const std::array<double, 6>& u) {
    Pose p;
    for (std::size_t a = 0; a < 6; ++a) p.v[a] = g.origin(a) + u[a] * g.step(a);
    return p;
}

// 9. Gamma, coverage monotone in added samples, perfect tiling histogram.
Verdict coverage() {
    const double g = gamma(4096.0, 64.0);
    const GridSpec fine{{0.5, 0.5, 0.5}, {8, 8, 8}, {0.1, 0.2, 0.3, 0.05, 0.1, 0.15}};
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> t(-5, 5), r(0, 7), batch(1, 40);
    std::uniform_real_distribution<double> ut(-6.0, 6.0), ur(0.0, 8.0), ug(0.5, 2.5);
    std::size_t violations = 0;
    for (int inst = 0; inst < 100; ++inst) {
        std::set<CubeKey> keys;
        const auto n = static_cast<std::size_t>(50 + inst);
        while (keys.size() < n) keys.insert({t(rng), t(rng), t(rng), r(rng), r(rng), r(rng)});
        const std::vector<CubeKey> baseline(keys.begin(), keys.end());
        const double gam = ug(rng);
        std::vector<Pose> samples;
        std::size_t last = baseline.size();
        for (int step = 0; step < 5; ++step) {
            for (int k = batch(rng); k > 0; --k) samples.push_back(pose_at(fine, {ut(rng), ut(rng), ut(rng), ur(rng), ur(rng), ur(rng)}));
            const auto missed = coverage_error(baseline, fine, samples, gam).missed;
            violations += missed > last;
            last = missed;
        }
    }
    // 4^6 lattice points, one sample in each 2-wide tile
    std::vector<CubeKey> block;
    std::vector<Pose> perTile;
    for (int i = 0; i < 4096; ++i) {
        CubeKey k{};
        std::array<double, 6> u{};
        for (std::size_t a = 0; a < 6; ++a) {
            k[a] = (i >> (2 * a)) & 3;
            u[a] = 2.0 * static_cast<double>(k[a] / 2) + 0.9;
        }
        block.push_back(k);
        if (std::all_of(k.begin(), k.end(), [](int x) { return x % 2 == 0; })) perTile.push_back(pose_at(fine, u));
    }
    const double tileGamma = gamma(static_cast<double>(block.size()), static_cast<double>(perTile.size()));
    const auto h = coverage_histogram(block, fine, perTile, tileGamma);
    const auto miss = coverage_error(block, fine, perTile, tileGamma).missed;
    const bool perfect = h.cubes == 64 && h.fraction(1) == 1.0 && miss == 0;
    return {g == 2.0 && violations == 0 && perfect,
            format("gamma(4096,64) = %.17g; 100 instances x 5 additions: %zu increases; tiling: %zu cubes, f(1) = %.3f, missed %zu",
                   g, violations, h.cubes, h.fraction(1), miss)};
}

// 10. Two full pipeline runs give byte-identical artifacts.
Verdict determinism() {
    const std::string data = UCVOL_DATA_DIR;
    const fs::path root = fs::temp_directory_path() / "ucvol_acceptance";
    fs::remove_all(root);
    auto config = [&](const fs::path& out) {
        return "[PointSetA]\nfile = " + data + "/triangle_a.txt\n[PointSetB]\nfile = " + data + "/triangle_b.txt\n" +
               "[Constraint]\nactiveLower = 0.8 0\nactiveUpper = 1 0\ncollision = 0.8 0\n"
               "[Sampling]\ninitial_Contact_1 = 1 1\ncartesianIntersectionMode = 4\ncartesianSteps = 6 6 6 4 4 4\n"
               "cayleyStep = 2\n"
               "[Basin]\nbottom_1 = 1-1;1-2;2-2;2-3;3-3;3-1\nbottom_2 = 1-1;2-1;2-2;3-2;3-3;1-3\n"
               "[Baseline]\nrefinement = 2 2 2 2 2 2\n"
               "[MonteCarlo]\ntrajectory = " + data + "/trajectory.txt\n[Output]\ndirectory = " + out.string() + "\n";
    };
    std::array<std::map<std::string, std::string>, 2> digests;
    std::string failure;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t pass = 0; pass < 2 && failure.empty(); ++pass) {
        const fs::path out = root / ("run" + std::to_string(pass));
        const auto cfg = parse_config(config(out));
        RunOptions opt;
        opt.baseDir = root;
        for (Command c : {Command::McIngest, Command::SampleBasin, Command::Baseline, Command::Measure}) {
            const auto r = run(c, cfg, opt);
            if (r.exitCode != kExitOk) {
                failure = format("%s failed: %s", to_string(c), r.message.c_str());
                break;
            }
            for (const auto& a : r.artifacts) digests[pass][a.generic_string()] = sha256_file(out / a);
        }
    }
    const double secs = seconds_since(t0);
    fs::remove_all(root);
    if (!failure.empty()) return {false, failure};
    std::size_t differing = 0;
    for (const auto& [path, digest] : digests[0]) {
        auto it = digests[1].find(path);
        differing += it == digests[1].end() || it->second != digest;
    }
    const bool same = differing == 0 && digests[0].size() == digests[1].size() && !digests[0].empty();
    return {same, format("%zu artifacts per run, %zu differ (%.1fs for both runs)", digests[0].size(), differing, secs)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::array<std::pair<const char*, std::function<Verdict()>>, 10> criteria{{
        {"volume vs dense Cartesian scan", oracle_volume},
        {"hybrid contains simplicial; basis solve ratio", variant_inclusion},
        {"Cayley forward/realize round trip", cayley_round_trip},
        {"simplex and parallelepiped slices", slice_intersection},
        {"frontier peak scaling", frontier_scaling},
        {"weighted basin volume and flat shape", weighted_volume},
        {"basin structure and union volume", basin_structure},
        {"Monte Carlo partitioning rules", mc_partitioning},
        {"coverage gamma, monotonicity, histogram", coverage},
        {"pipeline determinism", determinism},
    }};
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!selected.empty() && !selected.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        while (v.detail.ends_with("; ")) v.detail.resize(v.detail.size() - 2);
        failures += !v.pass;
        std::printf("%s [%d] %s: %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first, v.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
