// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0
//
// HDBSCAN (mutual reachability, minimum spanning tree, condensed tree,
// excess-of-mass selection) and average-linkage agglomerative clustering.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "longconv/diarize.hpp"
#include "longconv/error.hpp"

namespace longconv::diarize {

namespace {

using Matrix = std::vector<std::vector<double>>;

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix pairwise(std::span<const Embedding> x, Distance metric) {
  const std::size_t n = x.size();
  Matrix d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = distance(x[i], x[j], metric);
  }
  return d;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(b)] = find(a); }

 private:
  std::vector<std::size_t> parent_;
};

std::vector<std::size_t> first_appearance(const std::vector<std::size_t>& raw) {
  std::unordered_map<std::size_t, std::size_t> renumber;
  std::vector<std::size_t> out;
  out.reserve(raw.size());
  for (std::size_t r : raw) out.push_back(renumber.emplace(r, renumber.size()).first->second);
  return out;
}

// Returns a cluster id per point, or npos for noise. Empty when no cluster
// was selected.
constexpr std::size_t npos = static_cast<std::size_t>(-1);

std::vector<std::size_t> hdbscan(const Matrix& d, std::size_t min_cluster_size, std::size_t min_samples) {
  const std::size_t n = d.size();

  // Core distance: distance to the min_samples-th nearest point, self included.
  const std::size_t k = std::min(min_samples, n);
  std::vector<double> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row = d[i];
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k - 1), row.end());
    core[i] = row[k - 1];
  }
  auto reach = [&](std::size_t a, std::size_t b) { return std::max({core[a], core[b], d[a][b]}); };

  // Prim's algorithm on the mutual reachability graph.
  struct Edge {
    std::size_t a, b;
    double w;
  };
  std::vector<Edge> mst;
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, kInf);
  std::vector<std::size_t> from(n, 0);
  std::size_t current = 0;
  in_tree[0] = true;
  for (std::size_t added = 1; added < n; ++added) {
    std::size_t next = npos;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double w = reach(current, j);
      if (w < best[j]) {
        best[j] = w;
        from[j] = current;
      }
      if (next == npos || best[j] < best[next]) next = j;
    }
    in_tree[next] = true;
    mst.push_back({from[next], next, best[next]});
    current = next;
  }
  std::stable_sort(mst.begin(), mst.end(), [](const Edge& x, const Edge& y) { return x.w < y.w; });

  // Single-linkage dendrogram: leaves 0..n-1, merge m is node n + m.
  std::vector<std::size_t> left(n - 1), right(n - 1), size(2 * n - 1, 1);
  std::vector<double> height(n - 1);
  {
    UnionFind uf(n);
    std::vector<std::size_t> node_of(n);
    std::iota(node_of.begin(), node_of.end(), 0);
    for (std::size_t m = 0; m < mst.size(); ++m) {
      const std::size_t ra = uf.find(mst[m].a);
      const std::size_t rb = uf.find(mst[m].b);
      left[m] = node_of[ra];
      right[m] = node_of[rb];
      height[m] = mst[m].w;
      size[n + m] = size[left[m]] + size[right[m]];
      uf.unite(ra, rb);
      node_of[uf.find(ra)] = n + m;
    }
  }

  // Zero-distance merges are not real splits; their points leave at a finite
  // lambda above every real split.
  double min_positive = kInf;
  for (double h : height) {
    if (h > 0.0) min_positive = std::min(min_positive, h);
  }
  const double lambda_max = std::isfinite(min_positive) ? 2.0 / min_positive : 1.0;
  auto lambda_of = [&](double h) { return h > 0.0 ? 1.0 / h : lambda_max; };

  auto leaves = [&](std::size_t node, std::vector<std::size_t>& out) {
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      if (x < n) {
        out.push_back(x);
      } else {
        stack.push_back(right[x - n]);
        stack.push_back(left[x - n]);
      }
    }
  };

  // Condensed tree. Cluster 0 is the root; children always get larger ids.
  std::vector<std::size_t> cluster_parent{npos};
  std::vector<double> birth{0.0};
  std::vector<double> stability{0.0};
  std::vector<std::size_t> fell_from(n, 0);
  std::vector<double> fell_at(n, 0.0);

  struct Work {
    std::size_t node;
    std::size_t cluster;
  };
  std::vector<Work> queue{{2 * n - 2, 0}};
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const auto [node, cluster] = queue[qi];
    if (node < n) {
      fell_from[node] = cluster;
      fell_at[node] = lambda_max;
      continue;
    }
    const std::size_t m = node - n;
    const double lambda = lambda_of(height[m]);
    const std::size_t l = left[m];
    const std::size_t r = right[m];
    const bool big_l = size[l] >= min_cluster_size && height[m] > 0.0;
    const bool big_r = size[r] >= min_cluster_size && height[m] > 0.0;
    auto drop = [&](std::size_t child) {
      std::vector<std::size_t> pts;
      leaves(child, pts);
      for (std::size_t p : pts) {
        fell_from[p] = cluster;
        fell_at[p] = lambda;
      }
    };
    if (big_l && big_r) {
      for (std::size_t child : {l, r}) {
        const std::size_t id = cluster_parent.size();
        cluster_parent.push_back(cluster);
        birth.push_back(lambda);
        stability.push_back(0.0);
        queue.push_back({child, id});
      }
    } else if (big_l) {
      drop(r);
      queue.push_back({l, cluster});
    } else if (big_r) {
      drop(l);
      queue.push_back({r, cluster});
    } else {
      drop(l);
      drop(r);
    }
  }

  const std::size_t clusters = cluster_parent.size();
  for (std::size_t p = 0; p < n; ++p) stability[fell_from[p]] += fell_at[p] - birth[fell_from[p]];
  // Points that stay in a child cluster leave the parent when the child is
  // born.
  std::vector<std::size_t> members(clusters, 0);
  for (std::size_t p = 0; p < n; ++p) ++members[fell_from[p]];
  for (std::size_t c = clusters; c-- > 1;) members[cluster_parent[c]] += members[c];
  for (std::size_t c = 1; c < clusters; ++c) {
    stability[cluster_parent[c]] += static_cast<double>(members[c]) * (birth[c] - birth[cluster_parent[c]]);
  }

  // Excess of mass; the root itself is never selected.
  std::vector<bool> selected(clusters, false);
  std::vector<double> subtree(stability);
  std::vector<std::vector<std::size_t>> children(clusters);
  for (std::size_t c = 1; c < clusters; ++c) children[cluster_parent[c]].push_back(c);
  for (std::size_t c = clusters; c-- > 1;) {
    double child_sum = 0.0;
    for (std::size_t ch : children[c]) child_sum += subtree[ch];
    if (!children[c].empty() && child_sum > stability[c]) {
      subtree[c] = child_sum;
    } else {
      subtree[c] = stability[c];
      selected[c] = true;
      std::vector<std::size_t> stack(children[c]);
      while (!stack.empty()) {
        const std::size_t x = stack.back();
        stack.pop_back();
        selected[x] = false;
        stack.insert(stack.end(), children[x].begin(), children[x].end());
      }
    }
  }
  if (std::none_of(selected.begin(), selected.end(), [](bool s) { return s; })) return {};

  std::vector<std::size_t> labels(n, npos);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t c = fell_from[p]; c != npos; c = cluster_parent[c]) {
      if (selected[c]) {
        labels[p] = c;
        break;
      }
    }
  }
  return labels;
}

// Average linkage via the nearest-neighbour chain; returns the point groups
// obtained by applying every merge at distance <= threshold.
std::vector<std::size_t> agglomerative(const Matrix& d0, double threshold) {
  const std::size_t n = d0.size();
  Matrix d = d0;
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);
  struct Merge {
    std::size_t a, b;
    double d;
  };
  std::vector<Merge> merges;
  std::vector<std::size_t> chain;
  std::size_t remaining = n;
  while (remaining > 1) {
    if (chain.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        if (active[i]) {
          chain.push_back(i);
          break;
        }
      }
    }
    const std::size_t a = chain.back();
    const std::size_t prev = chain.size() >= 2 ? chain[chain.size() - 2] : npos;
    std::size_t b = npos;
    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j] || j == a) continue;
      if (b == npos || d[a][j] < d[a][b]) b = j;
    }
    if (prev != npos && d[a][prev] <= d[a][b]) b = prev;
    if (b != prev) {
      chain.push_back(b);
      continue;
    }
    chain.pop_back();
    chain.pop_back();
    const std::size_t keep = std::min(a, b);
    const std::size_t gone = std::max(a, b);
    merges.push_back({keep, gone, d[a][b]});
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == keep || k == gone) continue;
      const double v = (static_cast<double>(size[keep]) * d[keep][k] + static_cast<double>(size[gone]) * d[gone][k]) /
                       static_cast<double>(size[keep] + size[gone]);
      d[keep][k] = d[k][keep] = v;
    }
    size[keep] += size[gone];
    active[gone] = false;
    --remaining;
  }
  std::stable_sort(merges.begin(), merges.end(), [](const Merge& x, const Merge& y) { return x.d < y.d; });
  UnionFind uf(n);
  for (const Merge& m : merges) {
    if (m.d <= threshold) uf.unite(m.a, m.b);
  }
  std::vector<std::size_t> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = uf.find(i);
  return raw;
}

}  // namespace

ClusterAlgorithm parse_cluster_algorithm(std::string_view text) {
  if (text == "hdbscan") return ClusterAlgorithm::kHdbscan;
  if (text == "agglomerative") return ClusterAlgorithm::kAgglomerative;
  throw ValidationError("unknown clustering algorithm '" + std::string(text) + "'");
}

Distance parse_distance(std::string_view text) {
  if (text == "euclidean") return Distance::kEuclidean;
  if (text == "cosine") return Distance::kCosine;
  throw ValidationError("unknown distance '" + std::string(text) + "'");
}

void ClusterConfig::validate() const {
  if (min_cluster_size < 2) throw ValidationError("min_cluster_size must be at least 2");
  if (!std::isfinite(distance_threshold) || distance_threshold < 0.0) {
    throw ValidationError("distance_threshold must be a non-negative number");
  }
}

double distance(const Embedding& a, const Embedding& b, Distance metric) {
  if (a.size() != b.size()) throw ContractError("embeddings of different sizes");
  if (metric == Distance::kEuclidean) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return na == nb ? 0.0 : 1.0;
  return std::max(0.0, 1.0 - dot / std::sqrt(na * nb));
}

std::vector<std::size_t> cluster_speakers(std::span<const Embedding> embeddings, const ClusterConfig& config) {
  config.validate();
  const std::size_t n = embeddings.size();
  if (n == 0) throw ContractError("clustering needs at least one embedding");
  for (const Embedding& e : embeddings) {
    if (e.size() != embeddings.front().size()) throw ContractError("embeddings of different sizes");
    for (double v : e) {
      if (!std::isfinite(v)) throw ContractError("embedding value is not finite");
    }
  }
  if (n == 1) return {0};

  const Matrix d = pairwise(embeddings, config.distance);
  if (config.algorithm == ClusterAlgorithm::kAgglomerative) {
    return first_appearance(agglomerative(d, config.distance_threshold));
  }

  const std::size_t min_samples = config.min_samples == 0 ? config.min_cluster_size : config.min_samples;
  std::vector<std::size_t> labels = hdbscan(d, config.min_cluster_size, min_samples);
  if (labels.empty()) return std::vector<std::size_t>(n, 0);

  // Noise joins the nearest centroid.
  std::vector<std::size_t> ids;
  for (std::size_t l : labels) {
    if (l != npos && std::find(ids.begin(), ids.end(), l) == ids.end()) ids.push_back(l);
  }
  std::sort(ids.begin(), ids.end());
  const std::size_t dim = embeddings.front().size();
  std::vector<Embedding> centroid(ids.size(), Embedding(dim, 0.0));
  std::vector<std::size_t> count(ids.size(), 0);
  for (std::size_t p = 0; p < n; ++p) {
    if (labels[p] == npos) continue;
    const std::size_t c = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), labels[p]) - ids.begin());
    for (std::size_t k = 0; k < dim; ++k) centroid[c][k] += embeddings[p][k];
    ++count[c];
  }
  for (std::size_t c = 0; c < ids.size(); ++c) {
    for (double& v : centroid[c]) v /= static_cast<double>(count[c]);
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (labels[p] != npos) continue;
    std::size_t best = 0;
    double best_d = kInf;
    for (std::size_t c = 0; c < ids.size(); ++c) {
      const double dc = distance(embeddings[p], centroid[c], config.distance);
      if (dc < best_d) {
        best_d = dc;
        best = c;
      }
    }
    labels[p] = ids[best];
  }
  return first_appearance(labels);
}

}  // namespace longconv::diarize
