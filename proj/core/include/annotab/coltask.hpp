#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "annotab/ingest.hpp"
#include "annotab/prompting.hpp"

namespace annotab::coltask {

using ingest::Table;
using prompting::ColumnAnnotation;

enum class RejectionReason {
    UnknownColumn,
    NonNumericInput,
    TargetNotCategorical,
    TooManyClasses,
    TooFewClasses,
};

const char* rejection_reason_name(RejectionReason r);

struct ProblemSpec {
    std::vector<std::size_t> input_columns;  // column indices into the table
    std::size_t output_column = 0;
};

struct ValidationResult {
    std::optional<ProblemSpec> spec;
    std::optional<RejectionReason> rejection;

    bool accepted() const { return spec.has_value(); }
};

struct Caps {
    std::size_t max_train_rows = 1000;
    std::size_t max_features = 100;
    std::size_t max_classes = 10;
};

// Accepts iff every input column exists with a numeric type, the output
// column exists, and the target's distinct non-empty values number 2..10.
// Rejections are data, not errors.
ValidationResult validate_column_annotation(const Table& table, const ColumnAnnotation& ann,
                                            const Caps& caps = {});

struct ClassificationProblem {
    std::vector<std::vector<double>> features;  // n_samples x n_features, NaN = missing
    std::vector<int> labels;                    // 0..k-1
    std::vector<std::string> class_names;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
    std::string table_name;
    ColumnAnnotation annotation;
};

// Drops rows with empty targets, encodes labels by first appearance, caps
// features/classes/training rows, and makes one seeded stratified 50/50
// split. Throws DegenerateProblem when fewer than two classes survive.
ClassificationProblem extract_problem(const Table& table, const ProblemSpec& spec,
                                      std::uint64_t seed, const Caps& caps = {});

class Classifier {
  public:
    virtual ~Classifier() = default;
    virtual std::string name() const = 0;
    // Per-test-sample class probability vectors (rows sum to 1).
    virtual std::vector<std::vector<double>> fit_predict(const ClassificationProblem& p) = 0;
};

// Multinomial linear classifier: standardized features (train statistics,
// train-mean imputation of missing cells), full-batch gradient descent,
// 500 iterations, step 0.1, L2 1e-4.
class LinearBaseline : public Classifier {
  public:
    std::string name() const override { return "linear"; }
    std::vector<std::vector<double>> fit_predict(const ClassificationProblem& p) override;
};

// Ignores features; predicts train class frequencies for every sample.
class PriorBaseline : public Classifier {
  public:
    std::string name() const override { return "prior"; }
    std::vector<std::vector<double>> fit_predict(const ClassificationProblem& p) override;
};

std::vector<std::vector<double>> train_baseline(const ClassificationProblem& p);

// One-versus-one multiclass AUROC: mean over unordered class pairs of the
// two directed Mann-Whitney AUCs (midrank ties). Pairs with an absent
// class are excluded. Throws SingleClass when <2 classes are present.
double auroc_ovo(const std::vector<int>& labels,
                 const std::vector<std::vector<double>>& probabilities);

// Mean -ln p(true class), p clamped to [1e-15, 1-1e-15]. Labels outside
// the probability width score as always-wrong (clamped zero).
double cross_entropy(const std::vector<int>& labels,
                     const std::vector<std::vector<double>>& probabilities);

// Problem export (JSON) used by the pipeline artifact.
std::string problem_to_json(const ClassificationProblem& p);

}  // namespace annotab::coltask
