#include "annotab/coltask.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "annotab/errors.hpp"

namespace annotab::coltask {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::optional<std::size_t> find_column(const Table& table, const std::string& name) {
    std::string key = lower(name);
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (lower(table.columns[i].first) == key) return i;
    }
    return std::nullopt;
}

std::string cell_to_class_name(const Cell& cell) {
    if (const auto* iv = std::get_if<std::int64_t>(&cell)) return std::to_string(*iv);
    if (const auto* dv = std::get_if<double>(&cell)) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%g", *dv);
        return buf;
    }
    return std::get<std::string>(cell);
}

double cell_to_double(const Cell& cell) {
    if (const auto* iv = std::get_if<std::int64_t>(&cell)) return static_cast<double>(*iv);
    if (const auto* dv = std::get_if<double>(&cell)) return *dv;
    return kNaN;
}

}  // namespace

const char* rejection_reason_name(RejectionReason r) {
    switch (r) {
        case RejectionReason::UnknownColumn: return "UnknownColumn";
        case RejectionReason::NonNumericInput: return "NonNumericInput";
        case RejectionReason::TargetNotCategorical: return "TargetNotCategorical";
        case RejectionReason::TooManyClasses: return "TooManyClasses";
        case RejectionReason::TooFewClasses: return "TooFewClasses";
    }
    return "UnknownColumn";
}

ValidationResult validate_column_annotation(const Table& table, const ColumnAnnotation& ann,
                                            const Caps& caps) {
    ProblemSpec spec;
    auto target = find_column(table, ann.output_column);
    if (!target) return {{}, RejectionReason::UnknownColumn};
    spec.output_column = *target;

    for (const auto& name : ann.input_columns) {
        auto col = find_column(table, name);
        if (!col) return {{}, RejectionReason::UnknownColumn};
        if (*col == spec.output_column) continue;  // target listed among inputs: skip it
        if (table.columns[*col].second == ingest::SqlType::Text) {
            return {{}, RejectionReason::NonNumericInput};
        }
        spec.input_columns.push_back(*col);
    }
    if (spec.input_columns.empty()) return {{}, RejectionReason::UnknownColumn};

    // A FLOAT target with non-integral values is a regression column, not
    // a classification target.
    std::set<std::string> distinct;
    bool non_integral = false;
    for (const auto& row : table.rows) {
        const Cell& cell = row[spec.output_column];
        if (is_null(cell)) continue;
        if (const auto* dv = std::get_if<double>(&cell)) {
            if (*dv != std::floor(*dv)) non_integral = true;
        }
        distinct.insert(cell_to_class_name(cell));
    }
    if (table.columns[spec.output_column].second == ingest::SqlType::Float && non_integral) {
        return {{}, RejectionReason::TargetNotCategorical};
    }
    if (distinct.size() > caps.max_classes) return {{}, RejectionReason::TooManyClasses};
    if (distinct.size() < 2) return {{}, RejectionReason::TooFewClasses};
    return {spec, {}};
}

ClassificationProblem extract_problem(const Table& table, const ProblemSpec& spec,
                                      std::uint64_t seed, const Caps& caps) {
    ClassificationProblem problem;
    problem.table_name = table.name;
    for (std::size_t c : spec.input_columns) {
        problem.annotation.input_columns.push_back(table.columns[c].first);
    }
    problem.annotation.output_column = table.columns[spec.output_column].first;

    std::vector<std::size_t> feature_cols = spec.input_columns;
    if (feature_cols.size() > caps.max_features) feature_cols.resize(caps.max_features);

    // Rows with a non-empty target; labels by first appearance.
    std::unordered_map<std::string, int> label_of;
    std::vector<std::string> class_names;
    std::vector<int> labels;
    for (const auto& row : table.rows) {
        const Cell& target = row[spec.output_column];
        if (is_null(target)) continue;
        std::string name = cell_to_class_name(target);
        auto [it, inserted] = label_of.try_emplace(name, static_cast<int>(class_names.size()));
        if (inserted) class_names.push_back(name);
        labels.push_back(it->second);
        std::vector<double> feats;
        feats.reserve(feature_cols.size());
        for (std::size_t c : feature_cols) feats.push_back(cell_to_double(row[c]));
        problem.features.push_back(std::move(feats));
    }

    // Keep the max_classes most frequent classes.
    std::vector<std::size_t> freq(class_names.size(), 0);
    for (int l : labels) ++freq[static_cast<std::size_t>(l)];
    std::vector<int> by_freq(static_cast<int>(class_names.size()));
    for (std::size_t i = 0; i < by_freq.size(); ++i) by_freq[i] = static_cast<int>(i);
    std::stable_sort(by_freq.begin(), by_freq.end(),
                     [&](int a, int b) { return freq[a] > freq[b]; });
    if (by_freq.size() > caps.max_classes) by_freq.resize(caps.max_classes);
    std::vector<int> remap(class_names.size(), -1);
    std::vector<std::string> kept_names;
    for (int old_label : by_freq) {
        remap[static_cast<std::size_t>(old_label)] = static_cast<int>(kept_names.size());
        kept_names.push_back(class_names[static_cast<std::size_t>(old_label)]);
    }
    {
        std::vector<std::vector<double>> kept_feats;
        std::vector<int> kept_labels;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            int nl = remap[static_cast<std::size_t>(labels[i])];
            if (nl < 0) continue;
            kept_labels.push_back(nl);
            kept_feats.push_back(std::move(problem.features[i]));
        }
        problem.features = std::move(kept_feats);
        problem.labels = std::move(kept_labels);
        problem.class_names = std::move(kept_names);
    }
    if (problem.class_names.size() < 2) {
        throw DegenerateProblem("fewer than two classes after filtering in " + table.name);
    }

    // Seeded stratified 50/50 split; singleton classes go to train.
    std::mt19937_64 rng(seed);
    std::vector<std::vector<std::size_t>> by_class(problem.class_names.size());
    for (std::size_t i = 0; i < problem.labels.size(); ++i) {
        by_class[static_cast<std::size_t>(problem.labels[i])].push_back(i);
    }
    for (auto& idx : by_class) {
        std::shuffle(idx.begin(), idx.end(), rng);
        std::size_t n_train = (idx.size() + 1) / 2;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            (i < n_train ? problem.train_indices : problem.test_indices).push_back(idx[i]);
        }
    }
    std::sort(problem.train_indices.begin(), problem.train_indices.end());
    std::sort(problem.test_indices.begin(), problem.test_indices.end());

    // Training-row cap: shed from the most populous classes first.
    while (problem.train_indices.size() > caps.max_train_rows) {
        std::vector<std::size_t> train_freq(problem.class_names.size(), 0);
        for (std::size_t i : problem.train_indices) {
            ++train_freq[static_cast<std::size_t>(problem.labels[i])];
        }
        std::size_t worst =
            static_cast<std::size_t>(std::max_element(train_freq.begin(), train_freq.end()) -
                                     train_freq.begin());
        for (auto it = problem.train_indices.rbegin(); it != problem.train_indices.rend(); ++it) {
            if (static_cast<std::size_t>(problem.labels[*it]) == worst) {
                problem.train_indices.erase(std::next(it).base());
                break;
            }
        }
    }
    return problem;
}

std::vector<std::vector<double>> LinearBaseline::fit_predict(const ClassificationProblem& p) {
    const std::size_t d = p.features.empty() ? 0 : p.features[0].size();
    const std::size_t k = p.class_names.size();
    const auto& train = p.train_indices;
    const auto& test = p.test_indices;

    // Train-set mean/std; missing cells imputed with the train mean.
    std::vector<double> mean(d, 0.0), stdev(d, 1.0);
    for (std::size_t c = 0; c < d; ++c) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i : train) {
            double v = p.features[i][c];
            if (!std::isnan(v)) {
                sum += v;
                ++n;
            }
        }
        mean[c] = n ? sum / static_cast<double>(n) : 0.0;
        double ss = 0.0;
        for (std::size_t i : train) {
            double v = p.features[i][c];
            if (!std::isnan(v)) ss += (v - mean[c]) * (v - mean[c]);
        }
        double var = n ? ss / static_cast<double>(n) : 0.0;
        stdev[c] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    auto standardized = [&](std::size_t i, std::size_t c) {
        double v = p.features[i][c];
        if (std::isnan(v)) v = mean[c];
        return (v - mean[c]) / stdev[c];
    };

    const int iterations = 500;
    const double step = 0.1;
    const double l2 = 1e-4;
    // weights[k][d], bias[k]
    std::vector<std::vector<double>> w(k, std::vector<double>(d, 0.0));
    std::vector<double> b(k, 0.0);

    auto softmax_row = [&](std::size_t i, std::vector<double>& out) {
        double max_logit = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j) {
            double z = b[j];
            for (std::size_t c = 0; c < d; ++c) z += w[j][c] * standardized(i, c);
            out[j] = z;
            max_logit = std::max(max_logit, z);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            out[j] = std::exp(out[j] - max_logit);
            denom += out[j];
        }
        for (std::size_t j = 0; j < k; ++j) out[j] /= denom;
    };

    const double n_train = static_cast<double>(train.size());
    std::vector<double> probs(k);
    std::vector<std::vector<double>> gw(k, std::vector<double>(d));
    std::vector<double> gb(k);
    for (int iter = 0; iter < iterations; ++iter) {
        for (auto& row : gw) std::fill(row.begin(), row.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        double loss = 0.0;
        for (std::size_t i : train) {
            softmax_row(i, probs);
            int y = p.labels[i];
            loss -= std::log(std::max(probs[static_cast<std::size_t>(y)], 1e-300));
            for (std::size_t j = 0; j < k; ++j) {
                double err = probs[j] - (static_cast<int>(j) == y ? 1.0 : 0.0);
                gb[j] += err;
                for (std::size_t c = 0; c < d; ++c) gw[j][c] += err * standardized(i, c);
            }
        }
        if (!std::isfinite(loss)) throw NumericalFailure("non-finite training loss");
        for (std::size_t j = 0; j < k; ++j) {
            b[j] -= step * gb[j] / n_train;
            for (std::size_t c = 0; c < d; ++c) {
                w[j][c] -= step * (gw[j][c] / n_train + l2 * w[j][c]);
            }
        }
    }

    std::vector<std::vector<double>> out;
    out.reserve(test.size());
    for (std::size_t i : test) {
        softmax_row(i, probs);
        out.push_back(probs);
    }
    return out;
}

std::vector<std::vector<double>> PriorBaseline::fit_predict(const ClassificationProblem& p) {
    const std::size_t k = p.class_names.size();
    std::vector<double> prior(k, 0.0);
    for (std::size_t i : p.train_indices) ++prior[static_cast<std::size_t>(p.labels[i])];
    double n = static_cast<double>(p.train_indices.size());
    for (auto& v : prior) v = n > 0 ? v / n : 1.0 / static_cast<double>(k);
    return std::vector<std::vector<double>>(p.test_indices.size(), prior);
}

std::vector<std::vector<double>> train_baseline(const ClassificationProblem& p) {
    return LinearBaseline().fit_predict(p);
}

namespace {

// Directed AUC of score with `positive` as the positive class, midrank ties.
double mann_whitney_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        double midrank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = midrank;
        i = j + 1;
    }
    double rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (positive[t]) {
            rank_sum += rank[t];
            ++n_pos;
        }
    }
    std::size_t n_neg = n - n_pos;
    double u = rank_sum - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

double auroc_ovo(const std::vector<int>& labels,
                 const std::vector<std::vector<double>>& probabilities) {
    std::set<int> present(labels.begin(), labels.end());
    if (present.size() < 2) throw SingleClass("need at least two classes for AUROC");
    const std::size_t width = probabilities.empty() ? 0 : probabilities[0].size();

    double sum = 0.0;
    std::size_t pairs = 0;
    std::vector<int> classes(present.begin(), present.end());
    for (std::size_t a = 0; a < classes.size(); ++a) {
        for (std::size_t b = a + 1; b < classes.size(); ++b) {
            int ci = classes[a];
            int cj = classes[b];
            if (static_cast<std::size_t>(ci) >= width || static_cast<std::size_t>(cj) >= width) {
                continue;  // no scores for a class unseen in train
            }
            std::vector<double> score_i, score_j;
            std::vector<bool> is_i;
            for (std::size_t s = 0; s < labels.size(); ++s) {
                if (labels[s] != ci && labels[s] != cj) continue;
                score_i.push_back(probabilities[s][static_cast<std::size_t>(ci)]);
                score_j.push_back(probabilities[s][static_cast<std::size_t>(cj)]);
                is_i.push_back(labels[s] == ci);
            }
            std::vector<bool> is_j(is_i.size());
            for (std::size_t s = 0; s < is_i.size(); ++s) is_j[s] = !is_i[s];
            double auc_ij = mann_whitney_auc(score_i, is_i);
            double auc_ji = mann_whitney_auc(score_j, is_j);
            sum += (auc_ij + auc_ji) / 2.0;
            ++pairs;
        }
    }
    if (pairs == 0) throw SingleClass("no scorable class pairs");
    return sum / static_cast<double>(pairs);
}

double cross_entropy(const std::vector<int>& labels,
                     const std::vector<std::vector<double>>& probabilities) {
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        double p = 0.0;
        auto y = static_cast<std::size_t>(labels[i]);
        if (i < probabilities.size() && y < probabilities[i].size()) p = probabilities[i][y];
        p = std::clamp(p, 1e-15, 1.0 - 1e-15);
        total -= std::log(p);
    }
    return labels.empty() ? 0.0 : total / static_cast<double>(labels.size());
}

std::string problem_to_json(const ClassificationProblem& p) {
    nlohmann::ordered_json doc;
    doc["table_name"] = p.table_name;
    doc["input_columns"] = p.annotation.input_columns;
    doc["output_column"] = p.annotation.output_column;
    doc["class_names"] = p.class_names;
    doc["labels"] = p.labels;
    nlohmann::ordered_json feats = nlohmann::ordered_json::array();
    for (const auto& row : p.features) {
        nlohmann::ordered_json r = nlohmann::ordered_json::array();
        for (double v : row) {
            if (std::isnan(v)) r.push_back(nullptr);
            else r.push_back(v);
        }
        feats.push_back(std::move(r));
    }
    doc["features"] = std::move(feats);
    doc["train_indices"] = p.train_indices;
    doc["test_indices"] = p.test_indices;
    return doc.dump();
}

}  // namespace annotab::coltask
