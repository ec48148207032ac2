#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "vcell/celleval/evaluate.hpp"
#include "vcell/celleval/report.hpp"

using namespace vcell;
using namespace vcell::celleval;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// ---- oracles ----

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Enumerates every assignment of n1 ranks out of 1..n.
double enumerate_rank_sum_p(const VectorXd& a, const VectorXd& b) {
  const int n1 = static_cast<int>(a.size()), n = n1 + static_cast<int>(b.size());
  VectorXd all(n);
  all << a, b;
  std::vector<int> rank(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    rank[static_cast<std::size_t>(i)] = 1;
    for (int j = 0; j < n; ++j) rank[static_cast<std::size_t>(i)] += all(j) < all(i) ? 1 : 0;
  }
  int w = 0;
  for (int i = 0; i < n1; ++i) w += rank[static_cast<std::size_t>(i)];
  double le = 0, ge = 0, total = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != n1) continue;
    int s = 0;
    for (int i = 0; i < n; ++i) s += (mask >> i & 1u) ? i + 1 : 0;
    total += 1;
    le += s <= w;
    ge += s >= w;
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

// Exact U distribution via f(u; m, n) = f(u - n; m - 1, n) + f(u; m, n - 1).
double exact_u_p(double u, int m, int n) {
  std::map<std::tuple<int, int, int>, double> memo;
  std::function<double(int, int, int)> f = [&](int uu, int mm, int nn) -> double {
    if (uu < 0) return 0.0;
    if (mm == 0 || nn == 0) return uu == 0 ? 1.0 : 0.0;
    auto key = std::make_tuple(uu, mm, nn);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    const double v = f(uu - nn, mm - 1, nn) + f(uu, mm, nn - 1);
    memo[key] = v;
    return v;
  };
  const int umax = m * n;
  double le = 0, ge = 0, total = 0;
  for (int k = 0; k <= umax; ++k) {
    const double c = f(k, m, n);
    total += c;
    if (k <= u) le += c;
    if (k >= u) ge += c;
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

double pairwise_auroc(const std::vector<bool>& y, const VectorXd& s) {
  long wins2 = 0, pairs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (!y[i] || y[j]) continue;
      ++pairs;
      const double a = s(static_cast<Index>(i)), b = s(static_cast<Index>(j));
      wins2 += a > b ? 2 : (a == b ? 1 : 0);
    }
  }
  return 0.5 * static_cast<double>(wins2) / static_cast<double>(pairs);
}

double brute_average_precision(const std::vector<bool>& y, const VectorXd& s) {
  double sum = 0, pos = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!y[i]) continue;
    pos += 1;
    double at = 0, hits = 0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (s(static_cast<Index>(j)) >= s(static_cast<Index>(i))) {
        at += 1;
        hits += y[j] ? 1 : 0;
      }
    }
    sum += hits / at;
  }
  return sum / pos;
}

VectorXd brute_ranks(const VectorXd& x) {
  VectorXd r(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    double less = 0, same = 0;
    for (Index j = 0; j < x.size(); ++j) {
      less += x(j) < x(i);
      same += x(j) == x(i);
    }
    r(i) = less + (same + 1) / 2;
  }
  return r;
}

double brute_pearson(const VectorXd& a, const VectorXd& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (Index i = 0; i < a.size(); ++i) {
    ma += a(i) / n;
    mb += b(i) / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (Index i = 0; i < a.size(); ++i) {
    sab += (a(i) - ma) * (b(i) - mb);
    saa += (a(i) - ma) * (a(i) - ma);
    sbb += (b(i) - mb) * (b(i) - mb);
  }
  return saa == 0 || sbb == 0 ? 0.0 : sab / std::sqrt(saa * sbb);
}

VectorXd brute_bh(const VectorXd& p) {
  const Index m = p.size();
  VectorXd q(m);
  for (Index i = 0; i < m; ++i) {
    double best = 1.0;
    for (Index j = 0; j < m; ++j) {
      if (p(j) < p(i)) continue;
      // rank of p_j counting ties as the highest position
      double rank = 0;
      for (Index k = 0; k < m; ++k) rank += p(k) <= p(j);
      best = std::min(best, std::min(1.0, std::max(p(j), p(j) * static_cast<double>(m) / rank)));
    }
    q(i) = best;
  }
  return q;
}

Tensor random_cells(Index n, Index g, std::mt19937_64& rng, double shift = 0.0) {
  std::normal_distribution<double> d(3.0, 1.0);
  Tensor t(n, g);
  for (Index i = 0; i < t.size(); ++i) t(i) = std::max(0.0, d(rng) + shift);
  return t;
}

PerturbationGroup random_group(const std::string& id, Index n, Index g, std::mt19937_64& rng) {
  PerturbationGroup grp{id, random_cells(n, g, rng), random_cells(n, g, rng), random_cells(n, g, rng)};
  for (Index j = 0; j < g / 3; ++j) grp.pert.col(j).array() += 2.0;
  for (Index j = 0; j < g / 4; ++j) grp.pred.col(j).array() += 1.5;
  return grp;
}

}  // namespace

TEST(PseudobulkDelta, Cases) {
  Tensor x(2, 2);
  x << 1, 2, 3, 4;
  auto same = pseudobulk_delta({"a", x, x, x});
  EXPECT_EQ(same.truth, VectorXd::Zero(2));
  Tensor p(1, 2), c(1, 2);
  p << 5, 1;
  c << 2, 3;
  EXPECT_EQ(pseudobulk_delta({"b", p, c, p}).truth, vec({3, -2}));
  Tensor p3(3, 2), c3(3, 2);
  p3 << 1, 0, 2, 6, 6, 3;
  c3 << 0, 0, 0, 3, 3, 0;
  auto d = pseudobulk_delta({"c", p3, c3, c3});
  EXPECT_DOUBLE_EQ(d.truth(0), 3.0 - 1.0);
  EXPECT_DOUBLE_EQ(d.truth(1), 3.0 - 1.0);
  EXPECT_EQ(d.pred, VectorXd::Zero(2));
  EXPECT_THROW(pseudobulk_delta({"e", Tensor(0, 2), c, c}), ArgumentError);
}

TEST(PdCorr, Cases) {
  std::vector<DeltaEffect> same = {{vec({1, 2, 4}), vec({1, 2, 4})}, {vec({0, -1, 3}), vec({0, -1, 3})}};
  EXPECT_NEAR(pdcorr(same), 1.0, 1e-15);
  std::vector<DeltaEffect> neg = {{vec({1, 2, 4}), vec({-1, -2, -4})}};
  EXPECT_NEAR(pdcorr(neg), -1.0, 1e-15);
  // means 2, deviations (-1,0,1) and (-1,1,0): 1 / (sqrt2 sqrt2)
  std::vector<DeltaEffect> hand = {{vec({1, 3, 2}), vec({1, 2, 3})}};
  EXPECT_NEAR(pdcorr(hand), 0.5, 1e-15);
  std::vector<DeltaEffect> flat = {{vec({1, 2, 3}), vec({0, 0, 0})}};
  EXPECT_EQ(pdcorr(flat), 0.0);
}

TEST(Pds, PerfectSwappedAndRandom) {
  std::vector<DeltaEffect> perfect = {{vec({1, 0}), vec({1, 0})}, {vec({0, 1}), vec({0, 1})}, {vec({3, 3}), vec({3, 3})}};
  for (Distance d : {Distance::L1, Distance::L2, Distance::Cosine}) EXPECT_EQ(pds(perfect, d), 1.0);
  std::vector<DeltaEffect> swapped = {{vec({1, 0}), vec({0, 1})}, {vec({0, 1}), vec({1, 0})}};
  for (Distance d : {Distance::L1, Distance::L2, Distance::Cosine}) {
    EXPECT_EQ(pds_ranks(swapped, d), (std::vector<Index>{1, 1}));
    EXPECT_EQ(pds(swapped, d), 0.5);
  }
  EXPECT_THROW(pds({perfect[0]}, Distance::L2), ArgumentError);

  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(static_cast<unsigned>(seed));
    std::normal_distribution<double> n(0, 1);
    std::vector<DeltaEffect> deltas;
    for (int l = 0; l < 50; ++l) {
      VectorXd a(16), b(16);
      for (Index g = 0; g < 16; ++g) {
        a(g) = n(rng);
        b(g) = n(rng);
      }
      deltas.push_back({a.normalized(), b.normalized()});
    }
    for (Distance d : {Distance::L1, Distance::L2, Distance::Cosine}) {
      const double s = pds(deltas, d);
      EXPECT_GE(s, 0.35);
      EXPECT_LE(s, 0.65);
    }
  }
}

TEST(ErrorMetrics, HandValues) {
  auto perfect = error_metrics({{vec({1, 2}), vec({1, 2})}});
  EXPECT_EQ(perfect.mae, 0.0);
  EXPECT_EQ(perfect.mse, 0.0);
  auto e = error_metrics({{vec({3, -4}), vec({0, 0})}});
  EXPECT_EQ(e.mae, 7.0);
  EXPECT_EQ(e.mse, 25.0);
  auto two = error_metrics({{vec({3, -4}), vec({0, 0})}, {vec({1, 0}), vec({0, 0})}});
  EXPECT_EQ(two.mae, 4.0);
  EXPECT_EQ(two.mse, 13.0);
}

TEST(RSquared, Cases) {
  const VectorXd t = vec({1, 2, 3, 4});
  EXPECT_EQ(r_squared(t, t), 1.0);
  EXPECT_EQ(r_squared(VectorXd::Constant(4, 2.5), t), 0.0);
  EXPECT_DOUBLE_EQ(r_squared(vec({1, 2, 3, 5}), t), 1.0 - 1.0 / 5.0);
  EXPECT_EQ(r_squared(t, VectorXd::Constant(4, 2.0)), 0.0);
}

TEST(Wilcoxon, HandCases) {
  EXPECT_EQ(wilcoxon_p(VectorXd::Constant(5, 2.0), VectorXd::Constant(4, 2.0)), 1.0);
  EXPECT_NEAR(wilcoxon_p(vec({4, 5, 6}), vec({1, 2, 3})), 2.0 / binom(6, 3), 1e-15);
  EXPECT_NEAR(wilcoxon_p(vec({1, 2, 3}), vec({4, 5, 6})), 0.1, 1e-15);
}

TEST(Wilcoxon, ExactPathMatchesEnumeration) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int n1 = 1; n1 <= 9; ++n1) {
    for (int n2 = 1; n1 + n2 <= 10; ++n2) {
      for (int trial = 0; trial < 10; ++trial) {
        VectorXd a(n1), b(n2);
        for (auto& x : a) x = u(rng);
        for (auto& x : b) x = u(rng);
        EXPECT_EQ(wilcoxon_p(a, b), enumerate_rank_sum_p(a, b)) << n1 << "," << n2;
      }
    }
  }
}

TEST(Wilcoxon, NormalApproximationNearExact) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    const double shift = 0.1 * trial;
    VectorXd a(20), b(20);
    for (auto& x : a) x = n(rng) + shift;
    for (auto& x : b) x = n(rng);
    VectorXd all(40);
    all << a, b;
    const double w = brute_ranks(all).head(20).sum();
    EXPECT_NEAR(wilcoxon_p(a, b), exact_u_p(w - 210.0, 20, 20), 0.01);
  }
}

TEST(Wilcoxon, TiesUseApproximationInRange) {
  const double p = wilcoxon_p(vec({0, 0, 1, 2}), vec({0, 0, 0, 1}));
  EXPECT_GT(p, 0.0);
  EXPECT_LE(p, 1.0);
}

TEST(BhAdjust, HandCases) {
  EXPECT_EQ(bh_adjust(vec({0.3})), vec({0.3}));
  EXPECT_EQ(bh_adjust(vec({0.2, 0.2, 0.2})), vec({0.2, 0.2, 0.2}));
  const VectorXd q = bh_adjust(vec({0.01, 0.04, 0.03}));
  EXPECT_NEAR(q(0), 0.03, 1e-15);
  EXPECT_NEAR(q(1), 0.04, 1e-15);
  EXPECT_NEAR(q(2), 0.04, 1e-15);
  EXPECT_THROW(bh_adjust(vec({0.1, 1.2})), ArgumentError);
  EXPECT_THROW(bh_adjust(vec({-0.1})), ArgumentError);
}

TEST(BhAdjust, FuzzAgainstBruteForce) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> len(1, 30), coarse(0, 20);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    const Index m = len(rng);
    VectorXd p(m);
    for (auto& x : p) x = trial % 2 ? u(rng) : coarse(rng) / 20.0;
    const VectorXd q = bh_adjust(p);
    const VectorXd oracle = brute_bh(p);
    for (Index i = 0; i < m; ++i) {
      EXPECT_NEAR(q(i), oracle(i), 1e-15);
      EXPECT_GE(q(i), p(i));
      for (Index j = 0; j < m; ++j) {
        if (p(i) <= p(j)) EXPECT_LE(q(i), q(j));
      }
    }
    std::vector<Index> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    VectorXd pp(m);
    for (Index i = 0; i < m; ++i) pp(i) = p(perm[static_cast<std::size_t>(i)]);
    const VectorXd qp = bh_adjust(pp);
    for (Index i = 0; i < m; ++i) EXPECT_EQ(qp(i), q(perm[static_cast<std::size_t>(i)]));
  }
}

TEST(LogFoldChanges, Cases) {
  EXPECT_EQ(log_fold_changes(vec({2, 5}), vec({2, 5}), 1e-6), VectorXd::Zero(2));
  EXPECT_NEAR(log_fold_changes(vec({200}), vec({100}), 1e-6)(0), 1.0, 1e-8);
  EXPECT_NEAR(log_fold_changes(vec({3}), vec({1}), 0.0)(0), 1.584962500721156, 1e-14);
  EXPECT_LT(log_fold_changes(vec({1}), vec({3}), 0.0)(0), 0.0);
}

TEST(Spearman, MatchesBruteRanks) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> small(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    VectorXd a(12), b(12);
    for (Index i = 0; i < 12; ++i) {
      a(i) = small(rng);
      b(i) = small(rng);
    }
    EXPECT_EQ(average_ranks(a), brute_ranks(a));
    EXPECT_NEAR(spearman(a, b), brute_pearson(brute_ranks(a), brute_ranks(b)), 1e-12);
  }
  EXPECT_EQ(spearman(vec({1, 1, 1}), vec({1, 2, 3})), 0.0);
}

TEST(Ranking, AurocAuprc) {
  std::vector<bool> y = {true, true, false, false};
  EXPECT_EQ(*auroc(y, vec({4, 3, 2, 1})), 1.0);
  EXPECT_EQ(*auroc(y, vec({1, 1, 1, 1})), 0.5);
  EXPECT_EQ(*auprc(y, vec({4, 3, 2, 1})), 1.0);
  EXPECT_FALSE(auroc({true, true}, vec({1, 2})).has_value());
  EXPECT_FALSE(auprc({false, false}, vec({1, 2})).has_value());

  std::vector<bool> six = {true, false, true, false, false, true};
  const VectorXd s = vec({0.9, 0.9, 0.4, 0.7, 0.1, 0.4});
  EXPECT_EQ(*auroc(six, s), pairwise_auroc(six, s));
  EXPECT_NEAR(*auprc(six, s), brute_average_precision(six, s), 1e-15);

  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(2, 12), score(0, 5), coin(0, 1);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = len(rng);
    std::vector<bool> labels(static_cast<std::size_t>(n));
    VectorXd sc(n);
    for (int i = 0; i < n; ++i) {
      labels[static_cast<std::size_t>(i)] = coin(rng) == 1;
      sc(i) = score(rng);
    }
    labels[0] = true;
    labels[1] = false;
    EXPECT_EQ(*auroc(labels, sc), pairwise_auroc(labels, sc));
    EXPECT_NEAR(*auprc(labels, sc), brute_average_precision(labels, sc), 1e-12);
  }
}

namespace {

DEResult de_of(std::vector<Index> sig, VectorXd lfc) {
  DEResult r;
  r.lfc = std::move(lfc);
  r.pvals = VectorXd::Ones(r.lfc.size());
  r.padj = VectorXd::Ones(r.lfc.size());
  for (Index g : sig) r.padj(g) = r.pvals(g) = 0.001;
  r.significant = std::move(sig);
  return r;
}

}  // namespace

TEST(DePattern, Cases) {
  const VectorXd lfc = vec({2, -1, 0.5, 3, -2, 0.1, 0, 0});
  auto same = de_pattern_metrics(de_of({0, 1, 3}, lfc), de_of({0, 1, 3}, lfc));
  EXPECT_EQ(*same.overlap, 1.0);
  EXPECT_EQ(*same.precision, 1.0);
  EXPECT_EQ(*same.direction, 1.0);
  EXPECT_NEAR(*same.spearman, 1.0, 1e-15);

  auto disjoint = de_pattern_metrics(de_of({0, 1}, lfc), de_of({4, 5}, lfc));
  EXPECT_EQ(*disjoint.overlap, 0.0);
  EXPECT_EQ(*disjoint.precision, 0.0);
  EXPECT_FALSE(disjoint.direction.has_value());

  // k = 4 on each side, genes 2 and 3 shared, one of them flips sign
  const VectorXd truth_lfc = vec({2, -1, 0.5, 3, 0, 0, 0, 0});
  const VectorXd pred_lfc = vec({0, 0, -0.5, 3, 1, 1, 1, 1});
  auto half = de_pattern_metrics(de_of({0, 1, 2, 3}, truth_lfc), de_of({2, 3, 4, 5}, pred_lfc));
  EXPECT_EQ(*half.overlap, 0.5);
  EXPECT_EQ(*half.precision, 0.5);
  EXPECT_EQ(*half.direction, 0.5);

  auto empty = de_pattern_metrics(de_of({}, lfc), de_of({}, lfc));
  EXPECT_FALSE(empty.overlap || empty.precision || empty.direction || empty.spearman);
}

TEST(DePattern, TopKUsesAbsoluteFoldChange) {
  const VectorXd lfc = vec({0.1, -5, 2, -0.3});
  EXPECT_EQ(top_k_by_abs_lfc({0, 1, 2, 3}, lfc, 2), (std::vector<Index>{1, 2}));
  EXPECT_EQ(top_k_by_abs_lfc({0, 3}, lfc, 5), (std::vector<Index>{0, 3}));
}

TEST(Evaluate, PerfectAndNullPredictions) {
  std::mt19937_64 rng(6);
  std::vector<PerturbationGroup> groups;
  for (int l = 0; l < 4; ++l) groups.push_back(random_group("p" + std::to_string(l), 40, 12, rng));
  auto perfect = groups;
  for (auto& g : perfect) g.pred = g.pert;
  auto r = evaluate(perfect);
  EXPECT_NEAR(r.mean[kPDCorr], 1.0, 1e-12);
  EXPECT_EQ(r.mean[kDEOver], 1.0);
  EXPECT_EQ(r.mean[kMAE], 0.0);
  EXPECT_EQ(r.mean[kPDS_L2], 1.0);

  auto null = groups;
  for (auto& g : null) g.pred = g.ctrl;
  auto n = evaluate(null);
  for (const auto& row : n.rows) EXPECT_EQ(row.values[kPDCorr], 0.0);
}

TEST(Evaluate, IngestionErrors) {
  std::mt19937_64 rng(7);
  auto g = random_group("a", 10, 5, rng);
  auto short_ctrl = g;
  short_ctrl.ctrl = short_ctrl.ctrl.topRows(9);
  EXPECT_THROW(evaluate({short_ctrl}), DataError);
  auto other = random_group("b", 10, 6, rng);
  EXPECT_THROW(evaluate({g, other}), DataError);
  EXPECT_THROW(evaluate({g, g}), DataError);
  EXPECT_THROW(evaluate({}), DataError);
}

TEST(Evaluate, RangesFuzz) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> cells(3, 12), genes(2, 10);
  std::uniform_real_distribution<double> sh(-2, 2);
  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = cells(rng), g = genes(rng);
    std::vector<PerturbationGroup> groups;
    for (int l = 0; l < 3; ++l) {
      groups.push_back({"p" + std::to_string(l), random_cells(n, g, rng, sh(rng)), random_cells(n, g, rng),
                        random_cells(n, g, rng, sh(rng))});
    }
    auto r = evaluate(groups);
    for (const auto& row : r.rows) {
      const auto& v = row.values;
      for (Column c : {kPDS_L1, kPDS_L2, kPDS_cos, kDEOver, kDEPrec, kDirAgr, kAUROC, kAUPRC}) {
        if (!std::isnan(v[c])) {
          EXPECT_GE(v[c], 0.0);
          EXPECT_LE(v[c], 1.0);
        }
      }
      for (Column c : {kPDCorr, kLFCSpear}) {
        if (!std::isnan(v[c])) {
          EXPECT_GE(v[c], -1.0);
          EXPECT_LE(v[c], 1.0);
        }
      }
      EXPECT_GE(v[kMSE], 0.0);
    }
  }
}

TEST(Evaluate, ParallelOrderInvariantReproducible) {
  std::mt19937_64 rng(9);
  std::vector<PerturbationGroup> groups;
  for (int l = 0; l < 7; ++l) groups.push_back(random_group("p" + std::to_string(l), 30, 20, rng));
  const auto serial = evaluate(groups, {0.05, 1e-6, 1});
  const auto parallel = evaluate(groups, {0.05, 1e-6, 4});
  EXPECT_EQ(to_json(serial), to_json(parallel));
  std::reverse(groups.begin(), groups.end());
  std::shuffle(groups.begin(), groups.end(), rng);
  EXPECT_EQ(to_json(evaluate(groups)), to_json(serial));
  EXPECT_EQ(to_json(evaluate(groups)), to_json(evaluate(groups)));
}

TEST(Evaluate, MatchesIndependentRecomputation) {
  std::mt19937_64 rng(10);
  std::vector<PerturbationGroup> groups;
  for (int l = 0; l < 5; ++l) groups.push_back(random_group("p" + std::to_string(l), 50, 15, rng));
  const auto report = evaluate(groups);
  const double m = 5;
  std::vector<VectorXd> truth, pred;
  for (const auto& g : groups) {
    VectorXd ct = VectorXd::Zero(15), pt = VectorXd::Zero(15), pr = VectorXd::Zero(15);
    for (Index i = 0; i < 50; ++i) {
      for (Index j = 0; j < 15; ++j) {
        ct(j) += g.ctrl(i, j) / 50;
        pt(j) += g.pert(i, j) / 50;
        pr(j) += g.pred(i, j) / 50;
      }
    }
    truth.push_back(pt - ct);
    pred.push_back(pr - ct);
  }
  double mse = 0, mae = 0, corr = 0, pds2 = 0;
  for (std::size_t l = 0; l < 5; ++l) {
    double r = 0;
    const double own = (pred[l] - truth[l]).norm();
    for (std::size_t p = 0; p < 5; ++p) r += p != l && (pred[l] - truth[p]).norm() < own;
    pds2 += r / m;
    for (Index j = 0; j < 15; ++j) {
      mse += std::pow(pred[l](j) - truth[l](j), 2) / m;
      mae += std::abs(pred[l](j) - truth[l](j)) / m;
    }
    corr += brute_pearson(pred[l], truth[l]) / m;
  }
  EXPECT_NEAR(report.mean[kMSE], mse, 1e-10);
  EXPECT_NEAR(report.mean[kMAE], mae, 1e-10);
  EXPECT_NEAR(report.mean[kMSEPerGene], mse / 15, 1e-10);
  EXPECT_NEAR(report.mean[kPDCorr], corr, 1e-10);
  EXPECT_NEAR(report.mean[kPDS_L2], 1 - pds2 / m, 1e-12);
}

TEST(Report, JsonRoundTripAndCsv) {
  std::mt19937_64 rng(11);
  std::vector<PerturbationGroup> groups;
  for (int l = 0; l < 3; ++l) groups.push_back(random_group("p" + std::to_string(l), 8, 6, rng));
  auto r = evaluate(groups);
  auto back = report_from_json(to_json(r));
  EXPECT_EQ(to_json(back), to_json(r));
  const std::string csv = to_csv(r);
  EXPECT_EQ(csv.rfind("perturbation,MSE,MAE,", 0), 0u);
  EXPECT_NE(csv.find("\nMEAN,"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_THROW(report_from_json("{"), DataError);
}
