#include "wot/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

#include "wot/common.hpp"

namespace wot {

std::int64_t OverlapMatrix::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts)
    for (auto c : row) t += c;
  return t;
}

OverlapMatrix overlap_matrix(const Assignments& predictions, const std::map<std::string, std::string>& gold) {
  std::set<std::string> clusters, classes;
  for (const auto& [doc, cluster] : predictions) {
    auto it = gold.find(doc);
    if (it == gold.end()) throw ValidationError("document '" + doc + "' has a prediction but no gold label");
    clusters.insert(cluster);
    classes.insert(it->second);
  }
  OverlapMatrix m;
  m.clusters.assign(clusters.begin(), clusters.end());
  m.classes.assign(classes.begin(), classes.end());
  m.counts.assign(m.clusters.size(), std::vector<std::int64_t>(m.classes.size(), 0));
  auto index_in = [](const std::vector<std::string>& v, const std::string& s) {
    return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), s) - v.begin());
  };
  for (const auto& [doc, cluster] : predictions) {
    ++m.counts[index_in(m.clusters, cluster)][index_in(m.classes, gold.at(doc))];
  }
  return m;
}

namespace {

// Minimum-cost assignment of every row (rows <= cols). Returns the total.
std::int64_t hungarian_min(const std::vector<std::vector<std::int64_t>>& cost, std::vector<int>* row_to_col) {
  const int n = static_cast<int>(cost.size());
  const int m = n == 0 ? 0 : static_cast<int>(cost[0].size());
  if (n == 0) return 0;
  constexpr std::int64_t inf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(static_cast<std::size_t>(n + 1), 0), v(static_cast<std::size_t>(m + 1), 0);
  std::vector<int> p(static_cast<std::size_t>(m + 1), 0), way(static_cast<std::size_t>(m + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<std::int64_t> minv(static_cast<std::size_t>(m + 1), inf);
    std::vector<bool> used(static_cast<std::size_t>(m + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = p[static_cast<std::size_t>(j0)];
      std::int64_t delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const std::int64_t cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                                 u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::int64_t total = 0;
  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (p[static_cast<std::size_t>(j)] != 0) {
      assign[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
      total += cost[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)][static_cast<std::size_t>(j - 1)];
    }
  }
  if (row_to_col) *row_to_col = std::move(assign);
  return total;
}

// Best weight of a matching covering the smaller side of the submatrix.
std::int64_t best_weight(const std::vector<std::vector<std::int64_t>>& w, const std::vector<int>& rows,
                         const std::vector<int>& cols) {
  if (rows.empty() || cols.empty()) return 0;
  const bool transpose = rows.size() > cols.size();
  const auto& a = transpose ? cols : rows;
  const auto& b = transpose ? rows : cols;
  std::vector<std::vector<std::int64_t>> cost(a.size(), std::vector<std::int64_t>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      const auto r = transpose ? b[j] : a[i];
      const auto c = transpose ? a[i] : b[j];
      cost[i][j] = -w[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  return -hungarian_min(cost, nullptr);
}

}  // namespace

Matching max_weight_matching(const std::vector<std::vector<std::int64_t>>& weights) {
  Matching result;
  const auto n = weights.size();
  if (n == 0) return result;
  const auto m = weights[0].size();
  for (const auto& row : weights) {
    if (row.size() != m) throw ValidationError("ragged weight matrix");
    for (auto x : row)
      if (x < 0) throw ValidationError("matching weights must be non-negative");
  }
  std::vector<int> rows(n), cols(m);
  for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<int>(i);
  for (std::size_t j = 0; j < m; ++j) cols[j] = static_cast<int>(j);
  const std::int64_t optimum = best_weight(weights, rows, cols);
  result.weight = optimum;
  result.row_to_col.assign(n, -1);

  // Fix rows one at a time to the smallest option that keeps the optimum
  // reachable.
  std::vector<bool> col_used(m, false);
  std::int64_t fixed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> rest_rows;
    for (std::size_t r = i + 1; r < n; ++r) rest_rows.push_back(static_cast<int>(r));
    bool placed = false;
    for (std::size_t j = 0; j < m && !placed; ++j) {
      if (col_used[j]) continue;
      std::vector<int> rest_cols;
      for (std::size_t c = 0; c < m; ++c)
        if (!col_used[c] && c != j) rest_cols.push_back(static_cast<int>(c));
      // Rows must all be matched when n <= m; columns otherwise.
      if (n <= m ? rest_rows.size() > rest_cols.size() : rest_cols.size() > rest_rows.size()) continue;
      if (fixed + weights[i][j] + best_weight(weights, rest_rows, rest_cols) == optimum) {
        result.row_to_col[i] = static_cast<int>(j);
        col_used[j] = true;
        fixed += weights[i][j];
        placed = true;
      }
    }
    if (!placed && n <= m) throw Error("matching reconstruction failed");
  }
  return result;
}

ClusterAssignment assign_clusters(const OverlapMatrix& m) {
  if (m.clusters.empty() || m.classes.empty()) throw ValidationError("assignment needs at least one cluster and class");
  const auto matching = max_weight_matching(m.counts);
  ClusterAssignment a;
  a.matched_weight = matching.weight;
  for (std::size_t i = 0; i < m.clusters.size(); ++i) {
    const int j = matching.row_to_col[i];
    if (j >= 0) {
      a.mapping[m.clusters[i]] = m.classes[static_cast<std::size_t>(j)];
      a.matched_pairs.emplace_back(m.clusters[i], m.classes[static_cast<std::size_t>(j)]);
    } else {
      const auto& row = m.counts[i];
      const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      a.mapping[m.clusters[i]] = m.classes[best];
    }
  }
  return a;
}

namespace {

F1Summary summarize(const std::vector<ClassScore>& scores, const std::set<std::string>* subset) {
  F1Summary s;
  std::size_t tp = 0, fp = 0, fn = 0;
  double f1_sum = 0.0;
  for (const auto& c : scores) {
    if (subset && !subset->count(c.label)) continue;
    if (c.support == 0) continue;
    tp += c.true_positive;
    fp += c.predicted - c.true_positive;
    fn += c.support - c.true_positive;
    f1_sum += c.f1;
    ++s.classes;
    s.documents += c.support;
  }
  if (s.classes > 0) s.macro_f1 = f1_sum / static_cast<double>(s.classes);
  if (tp + fp + fn > 0) s.micro_f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  return s;
}

std::vector<ClassScore> class_scores(const Assignments& mapped, const std::map<std::string, std::string>& gold,
                                     const std::set<std::string>& classes,
                                     const std::set<std::string>* restrict_gold) {
  std::map<std::string, ClassScore> by;
  for (const auto& c : classes) by[c].label = c;
  for (const auto& [doc, predicted] : mapped) {
    const auto& truth = gold.at(doc);
    if (restrict_gold && !restrict_gold->count(truth)) continue;
    ++by[truth].support;
    ++by[predicted].predicted;
    if (predicted == truth) ++by[truth].true_positive;
  }
  std::vector<ClassScore> out;
  for (auto& [label, c] : by) {
    c.label = label;
    c.precision = c.predicted ? static_cast<double>(c.true_positive) / static_cast<double>(c.predicted) : 0.0;
    c.recall = c.support ? static_cast<double>(c.true_positive) / static_cast<double>(c.support) : 0.0;
    c.f1 = c.precision + c.recall > 0.0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    out.push_back(c);
  }
  return out;
}

}  // namespace

EvalReport f1_report(const ClusterAssignment& assignment, const Assignments& predictions,
                     const std::map<std::string, std::string>& gold, const std::set<std::string>& seen_classes) {
  Assignments mapped;
  mapped.reserve(predictions.size());
  std::set<std::string> clusters, classes;
  for (const auto& [doc, cluster] : predictions) {
    auto it = assignment.mapping.find(cluster);
    if (it == assignment.mapping.end()) throw ValidationError("cluster '" + cluster + "' has no class assignment");
    auto g = gold.find(doc);
    if (g == gold.end()) throw ValidationError("document '" + doc + "' has a prediction but no gold label");
    mapped.emplace_back(doc, it->second);
    clusters.insert(cluster);
    classes.insert(g->second);
  }
  for (const auto& s : seen_classes) {
    if (!classes.count(s)) warn("seen class '" + s + "' has no gold documents; excluded from macro averages");
  }

  EvalReport r;
  r.assignment = assignment;
  r.predicted_class_count = clusters.size();
  r.gold_class_count = classes.size();
  r.per_class = class_scores(mapped, gold, classes, nullptr);
  r.overall = summarize(r.per_class, nullptr);

  std::set<std::string> seen, unseen;
  for (const auto& c : classes) (seen_classes.count(c) ? seen : unseen).insert(c);
  r.seen = summarize(class_scores(mapped, gold, classes, &seen), &seen);
  r.unseen = summarize(class_scores(mapped, gold, classes, &unseen), &unseen);
  return r;
}

EvalReport evaluate(const Assignments& predictions, const std::map<std::string, std::string>& gold,
                    const std::set<std::string>& seen_classes) {
  const auto m = overlap_matrix(predictions, gold);
  return f1_report(assign_clusters(m), predictions, gold, seen_classes);
}

nlohmann::json EvalReport::to_json() const {
  auto summary = [](const F1Summary& s) {
    return nlohmann::json{{"micro_f1", s.micro_f1}, {"macro_f1", s.macro_f1}, {"documents", s.documents},
                          {"classes", s.classes}};
  };
  nlohmann::json j;
  j["overall"] = summary(overall);
  j["seen"] = summary(seen);
  j["unseen"] = summary(unseen);
  j["predicted_class_count"] = predicted_class_count;
  j["gold_class_count"] = gold_class_count;
  j["cluster_to_class"] = assignment.mapping;
  j["matched_pairs"] = assignment.matched_pairs;
  for (const auto& c : per_class) {
    j["per_class"].push_back({{"class", c.label}, {"support", c.support}, {"predicted", c.predicted},
                              {"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}});
  }
  return j;
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  char buf[160];
  out << "subset     micro-F1  macro-F1  classes  docs\n";
  auto line = [&](const char* name, const F1Summary& s) {
    std::snprintf(buf, sizeof buf, "%-9s  %8.2f  %8.2f  %7zu  %zu\n", name, 100.0 * s.micro_f1,
                  100.0 * s.macro_f1, s.classes, s.documents);
    out << buf;
  };
  line("overall", overall);
  line("seen", seen);
  line("unseen", unseen);
  out << "predicted classes: " << predicted_class_count << " (gold: " << gold_class_count << ")\n\n";
  out << "class                 support  predicted  precision  recall      F1\n";
  for (const auto& c : per_class) {
    std::snprintf(buf, sizeof buf, "%-20s  %7zu  %9zu  %9.4f  %6.4f  %6.4f\n", c.label.c_str(), c.support,
                  c.predicted, c.precision, c.recall, c.f1);
    out << buf;
  }
  return out.str();
}

}  // namespace wot
