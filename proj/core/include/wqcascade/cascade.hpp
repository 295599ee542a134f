#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wqcascade/dataio.hpp"
#include "wqcascade/forest.hpp"

namespace wqcascade {

/// Training subset of one cascade stage.
struct StageData {
    Dataset subset;
    /// Smallest ecoli admitted (the previous stage's 25th percentile; 0 for
    /// the first stage).
    double lower_bound = 0.0;
    double median = 0.0;
    /// Trim percentile of this subset; the next stage keeps ecoli >= p25.
    double p25 = 0.0;
};

struct StagePlan {
    std::vector<StageData> stages;
    /// Set when construction stopped before n_stages because the next subset
    /// would be smaller than min_stage_size.
    bool stopped_early = false;
};

inline constexpr std::size_t kDefaultMinStageSize = 100;

/// Stage 1 is `train`; stage k+1 keeps the records of stage k whose ecoli is
/// >= the interpolated `trim_percentile` of stage k.
StagePlan build_stages(const Dataset& train, std::size_t n_stages, double trim_percentile = 25.0,
                       std::size_t min_stage_size = kDefaultMinStageSize);

enum class ThresholdMode { Uniform, Increasing };

/// Which weak threshold the previous stage's probability is compared with.
enum class WeakPairing {
    /// p_{k-1} >= w_{k-1}, falling back to w_k when stage k-1 has none.
    PreviousStage,
    /// p_{k-1} >= w_k.
    CurrentStage,
};

/// How a probability is compared with a threshold.
enum class Comparison { AtLeast, Greater };

struct ThresholdPolicy {
    ThresholdMode mode = ThresholdMode::Uniform;
    double uniform_theta = 0.80;
    std::vector<double> increasing_thetas{0.65, 0.70, 0.75, 0.80, 0.80, 0.80};
    /// Empty disables the double-weak rule; otherwise one entry per stage.
    std::vector<std::optional<double>> weak_thresholds;
    /// Empty uses the base feature list at every stage; otherwise one list
    /// per stage.
    std::vector<std::vector<std::string>> feature_masks;
    WeakPairing weak_pairing = WeakPairing::PreviousStage;
    Comparison comparison = Comparison::AtLeast;

    static ThresholdPolicy uniform(double theta);
    /// Increasing thresholds, double-weak rule and feature masks together.
    static ThresholdPolicy all_adjustments(std::size_t n_stages = 6);

    /// None at stage 1, 0.70 at stages 2-3, 0.75 from stage 4.
    static std::vector<std::optional<double>> default_weak_thresholds(std::size_t n_stages);
    /// Stages 1-3 drop air_temp from `base`; later stages use all of `base`.
    static std::vector<std::vector<std::string>> default_feature_masks(std::size_t n_stages,
                                                                      const std::vector<std::string>& base);

    /// `stage` is 0-based.
    double theta(std::size_t stage) const;
    std::optional<double> weak(std::size_t stage) const;
    std::vector<std::string> features(std::size_t stage, const std::vector<std::string>& base) const;

    bool passes(double probability, double threshold) const noexcept {
        return comparison == Comparison::AtLeast ? probability >= threshold : probability > threshold;
    }

    /// ConfigError when a per-stage list does not have `n_stages` entries (at
    /// least that many with `allow_longer`) or a value is out of range.
    void validate(std::size_t n_stages, bool allow_longer = false) const;
};

/// One trained stage. The forest is shared so that policy variants of a
/// model do not copy it.
struct StageSpec {
    std::size_t index = 1;
    std::size_t train_size = 0;
    double train_lower_bound = 0.0;
    double median = 0.0;
    double p25 = 0.0;
    double theta = 0.8;
    /// Absent when the stage has no weak threshold or it would not lie
    /// below theta.
    std::optional<double> weak;
    std::vector<std::string> features;
    std::shared_ptr<const Forest> forest;
};

enum class Verdict { Excellent, Suspect };
enum class ExitRule { None, Strong, DoubleWeak };

struct CascadePrediction {
    Verdict verdict = Verdict::Suspect;
    /// 1-based exit stage; 0 for Suspect.
    std::size_t stage = 0;
    ExitRule rule = ExitRule::None;
    /// p_k for every visited stage, in order.
    std::vector<double> probabilities;

    bool excellent() const noexcept { return verdict == Verdict::Excellent; }
};

class CascadeModel {
public:
    CascadeModel() = default;
    CascadeModel(std::vector<StageSpec> stages, ForestParams params, ThresholdPolicy policy,
                 std::vector<std::string> base_features);

    std::span<const StageSpec> stages() const noexcept { return stages_; }
    const ForestParams& params() const noexcept { return params_; }
    const ThresholdPolicy& policy() const noexcept { return policy_; }
    std::span<const std::string> base_features() const noexcept { return base_features_; }

    /// Same forests under a different threshold policy. ConfigError if the
    /// policy asks for different stage features than the model was trained
    /// with.
    CascadeModel with_policy(const ThresholdPolicy& policy) const;

    CascadePrediction classify(const Measurement& m) const;
    /// Classification from precomputed per-stage probabilities. Only the
    /// prefix that the rule visits is read.
    CascadePrediction decide(std::span<const double> stage_probabilities) const;

    std::string to_json() const;
    static CascadeModel from_json(std::string_view text);

private:
    std::vector<StageSpec> stages_;
    ForestParams params_;
    ThresholdPolicy policy_;
    std::vector<std::string> base_features_;
};

/// Trains one forest per stage. Stage k (1-based) labels its subset Below
/// iff ecoli <= median_k and uses seed derive_seed(params.seed, k).
CascadeModel fit_cascade(const Dataset& train, const ForestParams& params, const ThresholdPolicy& policy,
                         std::size_t n_stages = 6, const std::vector<std::string>& base_features = default_features(),
                         unsigned threads = 0, std::size_t min_stage_size = kDefaultMinStageSize);

CascadePrediction classify_measurement(const CascadeModel& model, const Measurement& m);

/// Verdicts for every record, in record order.
std::vector<CascadePrediction> classify_dataset(const CascadeModel& model, const Dataset& d, unsigned threads = 0);

/// Probabilities of every stage for every record (not short-circuited), so
/// that several policies can be scored against one pass over the forests.
std::vector<std::vector<double>> stage_probabilities(const CascadeModel& model, const Dataset& d,
                                                     unsigned threads = 0);

struct CascadeReport {
    double limit = 250.0;
    std::size_t n_test = 0;
    std::size_t n_above_limit = 0;
    /// Truly <= limit and classified Excellent.
    std::size_t true_positive = 0;
    /// Over truly <= limit records; absent when there are none.
    std::optional<double> true_positive_rate;
    /// Truly > limit but classified Excellent.
    std::size_t false_negative = 0;
    /// Over truly > limit records; absent when there are none.
    std::optional<double> false_negative_rate;
    std::size_t suspects = 0;
    /// Excellent exits per stage (index 0 is stage 1).
    std::vector<std::size_t> stage_exits;
    /// Of stage_exits, those taken by the double-weak rule.
    std::vector<std::size_t> double_weak_exits;
};

/// Tallies verdicts against the truth. `limit` only affects scoring.
CascadeReport score_cascade(std::span<const CascadePrediction> predictions, const Dataset& test, std::size_t n_stages,
                            double limit = 250.0);

CascadeReport evaluate_cascade(const CascadeModel& model, const Dataset& test, double limit = 250.0,
                               unsigned threads = 0);

std::string_view to_string(ExitRule rule);

}  // namespace wqcascade
