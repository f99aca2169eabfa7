#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "annmix/data.hpp"
#include "annmix/head.hpp"
#include "annmix/likelihood.hpp"
#include "annmix/prior.hpp"
#include "annmix/rng.hpp"

namespace annmix {

// Fixed: one shared head. Intercepts: shared head plus per-annotator output
// offsets. Slopes: per-annotator heads around the shared head, plus the
// intercepts (the slopes model subsumes the intercepts model).
enum class EffectsMode { Fixed, Intercepts, Slopes };

std::string to_string(EffectsMode mode);
EffectsMode parse_effects(std::string_view name);

struct ModelSpec {
    EffectsMode effects = EffectsMode::Fixed;
    ResponseScale scale;
    std::size_t input_dim = 768;
    std::size_t hidden_dim = 128;

    HeadShape head_shape() const {
        return {input_dim, hidden_dim, static_cast<std::size_t>(scale.output_dim())};
    }
    bool has_intercepts() const { return effects != EffectsMode::Fixed; }
    bool has_slopes() const { return effects == EffectsMode::Slopes; }

    bool operator==(const ModelSpec&) const = default;
};

// Every trainable value lives in one flat vector:
//   [ theta | nu0 (continuous only) | intercepts, A x R | slopes, A x P ]
// where R is the intercept width and P the head size.
struct ParamLayout {
    HeadShape head;
    std::size_t annotators = 0;
    std::size_t intercept_dim = 0;  // 0 when the model has no intercepts
    bool has_nu0 = false;
    bool has_slopes = false;

    ParamLayout() = default;
    ParamLayout(const ModelSpec& spec, std::size_t num_annotators);

    std::size_t theta_offset() const { return 0; }
    std::size_t nu0_offset() const { return head.size(); }
    std::size_t intercepts_offset() const { return head.size() + (has_nu0 ? 1 : 0); }
    std::size_t intercept_offset(std::size_t a) const { return intercepts_offset() + a * intercept_dim; }
    std::size_t slopes_offset() const { return intercepts_offset() + annotators * intercept_dim; }
    std::size_t slope_offset(std::size_t a) const { return slopes_offset() + a * head.size(); }
    std::size_t size() const { return slopes_offset() + (has_slopes ? annotators * head.size() : 0); }
};

class FittedModel {
public:
    FittedModel() = default;
    FittedModel(ModelSpec spec, std::vector<std::string> annotators, std::vector<double> params,
                CovarianceState covariance);

    // theta drawn fan-in uniform, nu0 = 0, effects at the prior mean
    // (rho = 0, phi = theta), intercept covariance = I, slope variances = 1.
    static FittedModel initial(const ModelSpec& spec, std::vector<std::string> annotators, Rng& rng,
                               double covariance_floor = kDefaultCovarianceFloor);

    const ModelSpec& spec() const { return spec_; }
    const ParamLayout& layout() const { return layout_; }
    std::span<const std::string> annotators() const { return annotators_; }
    std::optional<std::size_t> find_annotator(std::string_view id) const;

    std::span<const double> params() const { return params_; }
    std::span<double> mutable_params() { return params_; }

    HeadView theta() const;
    HeadView slope_head(std::size_t annotator) const;
    std::span<const double> intercept(std::size_t annotator) const;
    double nu0() const { return layout_.has_nu0 ? params_[layout_.nu0_offset()] : 0.0; }
    BetaLink link() const { return {nu0()}; }

    const CovarianceState& covariance() const { return covariance_; }
    void set_covariance(CovarianceState covariance) { covariance_ = std::move(covariance); }

private:
    ModelSpec spec_;
    ParamLayout layout_;
    std::vector<std::string> annotators_;
    std::unordered_map<std::string, std::size_t> annotator_index_;
    std::vector<double> params_;
    CovarianceState covariance_;
};

// Class distribution (categorical) or Beta parameters (continuous).
using Prediction = std::variant<std::vector<double>, BetaParams>;
// Class distribution (categorical) or expected response (continuous).
using MarginalPrediction = std::variant<std::vector<double>, double>;

// Known annotators get their effects; unknown or absent annotators get the
// prior mean (rho = 0, phi = theta). The fixed model ignores the annotator.
Prediction predict(const FittedModel& model, std::span<const double> z,
                   std::optional<std::string_view> annotator = std::nullopt);
Prediction predict_indexed(const FittedModel& model, std::span<const double> z,
                           std::optional<std::size_t> annotator);

// Monte Carlo average over effects drawn from the fitted prior
// (rho ~ N(0, sigma), phi ~ N(theta, diag(v))).
MarginalPrediction predict_marginalized(const FittedModel& model, std::span<const double> z, int num_samples,
                                        std::uint64_t seed);

// Point prediction: argmax class (ties to the lowest index) or Beta mean.
double point_prediction(const Prediction& prediction);
double point_prediction(const MarginalPrediction& prediction);

inline constexpr const char* kLayoutVersion = "annmix-head-v1:w1-rowmajor,b1,w2-rowmajor,b2";

std::string model_to_json(const FittedModel& model);
FittedModel model_from_json(std::string_view text);

}  // namespace annmix
