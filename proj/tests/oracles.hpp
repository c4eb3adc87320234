#pragma once

// Slow, literal re-implementations used as test oracles. Nothing here calls
// into the library's metric code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// Latency formulas written with 1-based token indices.

inline double al(const std::vector<double>& t, std::size_t X, double dur) {
  const double Y = static_cast<double>(t.size());
  const double lambda = Y / static_cast<double>(X);
  const double unit = dur / static_cast<double>(X);
  double s = 0;
  for (std::size_t i = 1; i <= t.size(); ++i) s += t[i - 1] - (static_cast<double>(i) - 1) / lambda * unit;
  return s / Y;
}

inline double laal(const std::vector<double>& t, std::size_t X, std::size_t Yref, double dur) {
  const double Y = static_cast<double>(t.size());
  const double lambda = std::max(Y, static_cast<double>(Yref)) / static_cast<double>(X);
  const double unit = dur / static_cast<double>(X);
  double s = 0;
  for (std::size_t i = 1; i <= t.size(); ++i) s += t[i - 1] - (static_cast<double>(i) - 1) / lambda * unit;
  return s / Y;
}

// Classic DAL: d'_1 = d_1, d'_i = max(d_i, d'_{i-1} + 1/gamma), averaged against the ideal diagonal.
inline double dal(const std::vector<double>& t, std::size_t X, double dur) {
  const double Y = static_cast<double>(t.size());
  const double gamma = Y / static_cast<double>(X);
  const double unit = dur / static_cast<double>(X);
  std::vector<double> d(t.size());
  double s = 0;
  for (std::size_t i = 1; i <= t.size(); ++i) {
    d[i - 1] = i == 1 ? t[0] : std::max(t[i - 1], d[i - 2] + unit / gamma);
    s += d[i - 1] - (static_cast<double>(i) - 1) / gamma * unit;
  }
  return s / Y;
}

inline double ap(const std::vector<double>& src, const std::vector<double>& tgt) {
  double a = 0, b = 0;
  for (double x : src) a += x;
  for (double x : tgt) b += x;
  return b / a;
}

inline double atd(const std::vector<double>& t, double dur) {
  const double Y = static_cast<double>(t.size());
  double s = 0;
  for (std::size_t i = 1; i <= t.size(); ++i) s += t[i - 1] - static_cast<double>(i) / Y * dur;
  return s / Y;
}

inline double rtf(double processing, double audio) { return processing / audio; }

// HR = 1 - |aligned target indices <= len| / len.
inline double hr(std::size_t len, const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs) {
  std::set<std::int64_t> aligned;
  for (const auto& [j, i] : pairs) {
    if (i >= 1 && static_cast<std::size_t>(i) <= len) aligned.insert(i);
  }
  return 1.0 - static_cast<double>(aligned.size()) / static_cast<double>(len);
}

// Edit distance by plain recursion with a memo table.
template <typename T>
std::size_t edit_distance(const std::vector<T>& a, const std::vector<T>& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  auto rec = [&](auto&& self, std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    const auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const std::size_t r = std::min({self(self, i + 1, j) + 1, self(self, i, j + 1) + 1,
                                    self(self, i + 1, j + 1) + (a[i] == b[j] ? 0u : 1u)});
    memo[key] = r;
    return r;
  };
  return rec(rec, 0, 0);
}

// Visits every hypothesis over `alphabet` with length <= max_len by recursive extension,
// carrying the edit-distance column against `ref`. visit(hyp, distance) is called per node.
template <typename Visit>
void edit_distance_tree(const std::vector<int>& ref, int alphabet, std::size_t max_len, Visit&& visit) {
  std::vector<int> hyp;
  // one DP column per depth, reused across siblings
  std::vector<std::vector<std::size_t>> cols(max_len + 1, std::vector<std::size_t>(ref.size() + 1));
  for (std::size_t i = 0; i <= ref.size(); ++i) cols[0][i] = i;  // empty hypothesis
  auto rec = [&](auto&& self, std::size_t depth) -> void {
    const auto& prev = cols[depth];
    visit(hyp, prev[ref.size()]);
    if (depth == max_len) return;
    auto& next = cols[depth + 1];
    for (int s = 0; s < alphabet; ++s) {
      next[0] = prev[0] + 1;
      for (std::size_t i = 1; i <= ref.size(); ++i) {
        next[i] = std::min({prev[i] + 1, next[i - 1] + 1, prev[i - 1] + (ref[i - 1] == s ? 0u : 1u)});
      }
      hyp.push_back(s);
      self(self, depth + 1);
      hyp.pop_back();
    }
  };
  rec(rec, 0);
}

inline std::vector<std::string> ngrams(const std::vector<std::string>& w, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + n <= w.size(); ++i) {
    std::string g;
    for (std::size_t k = 0; k < n; ++k) g += w[i + k] + "\x1f";
    out.push_back(g);
  }
  return out;
}

inline double bleu(const std::vector<std::string>& ref, const std::vector<std::string>& hyp, std::size_t N = 4) {
  if (hyp.empty()) return 0.0;
  double log_sum = 0;
  for (std::size_t n = 1; n <= N; ++n) {
    const auto h = ngrams(hyp, n);
    const auto r = ngrams(ref, n);
    if (h.empty()) return 0.0;
    std::set<std::string> distinct(h.begin(), h.end());
    double clipped = 0;
    for (const auto& g : distinct) {
      clipped += static_cast<double>(std::min(std::count(h.begin(), h.end(), g), std::count(r.begin(), r.end(), g)));
    }
    const double p = clipped / static_cast<double>(h.size());
    if (p == 0) return 0.0;
    log_sum += std::log(p) / static_cast<double>(N);
  }
  const double c = static_cast<double>(hyp.size()), rl = static_cast<double>(ref.size());
  const double bp = c > rl ? 1.0 : std::exp(1.0 - rl / c);
  return bp * std::exp(log_sum);
}

// Textbook Jaro-Winkler (prefix up to 4, p = 0.1).
inline double jaro_winkler(const std::string& s1, const std::string& s2) {
  if (s1 == s2) return 1.0;
  if (s1.empty() || s2.empty()) return 0.0;
  const int l1 = static_cast<int>(s1.size()), l2 = static_cast<int>(s2.size());
  const int window = std::max(0, std::max(l1, l2) / 2 - 1);
  std::vector<int> m1(l1, 0), m2(l2, 0);
  int m = 0;
  for (int i = 0; i < l1; ++i) {
    for (int j = std::max(0, i - window); j < std::min(l2, i + window + 1); ++j) {
      if (!m2[j] && s1[i] == s2[j]) {
        m1[i] = m2[j] = 1;
        ++m;
        break;
      }
    }
  }
  if (m == 0) return 0.0;
  int t = 0, k = 0;
  for (int i = 0; i < l1; ++i) {
    if (!m1[i]) continue;
    while (!m2[k]) ++k;
    if (s1[i] != s2[k]) ++t;
    ++k;
  }
  const double md = m;
  const double jaro = (md / l1 + md / l2 + (md - t / 2.0) / md) / 3.0;
  int prefix = 0;
  while (prefix < 4 && prefix < l1 && prefix < l2 && s1[prefix] == s2[prefix]) ++prefix;
  return jaro + prefix * 0.1 * (1 - jaro);
}

inline double levenshtein_similarity(const std::string& a, const std::string& b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  std::vector<char> va(a.begin(), a.end()), vb(b.begin(), b.end());
  return 1.0 - static_cast<double>(edit_distance(va, vb)) / static_cast<double>(longest);
}

// Longest prefix shared by every sequence, found by trying lengths from the longest down.
inline std::vector<std::string> lcp(const std::vector<std::vector<std::string>>& seqs) {
  std::size_t shortest = seqs.front().size();
  for (const auto& s : seqs) shortest = std::min(shortest, s.size());
  for (std::size_t len = shortest + 1; len-- > 0;) {
    bool all = true;
    for (const auto& s : seqs) {
      if (!std::equal(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(len), seqs.front().begin())) all = false;
    }
    if (all) return {seqs.front().begin(), seqs.front().begin() + static_cast<std::ptrdiff_t>(len)};
  }
  return {};
}

inline std::map<std::string, double> glossary_bias(const std::map<std::string, double>& p,
                                                   const std::set<std::string>& g, double alpha) {
  std::map<std::string, double> out;
  double z = 0;
  for (const auto& [w, v] : p) z += (g.count(w) ? alpha : 1 - alpha) * v;
  for (const auto& [w, v] : p) out[w] = (g.count(w) ? alpha : 1 - alpha) * v / z;
  return out;
}

// Random helpers shared by property tests.
inline std::vector<double> random_commit_times(std::mt19937_64& rng, std::size_t n, double max_t) {
  std::uniform_real_distribution<double> u(0.0, max_t);
  std::vector<double> t(n);
  for (auto& x : t) x = u(rng);
  std::sort(t.begin(), t.end());
  return t;
}

}  // namespace oracle
