#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedprov/data.hpp"
#include "fedprov/model.hpp"
#include "fedprov/params.hpp"
#include "fedprov/rng.hpp"

namespace fedprov {

enum class AttackType { none, add_noise, sign_flip, dirty_label, mb, badnets, mra, dba, blind, fra };
enum class DirtyLabelVariant { fix_fix, fix_rnd, rnd_fix, rnd_rnd };
enum class MbVariant { unit, sign };
enum class TriggerKind { patch, noise };

const char* to_string(AttackType t);
AttackType attack_type_from_string(const std::string& s);
DirtyLabelVariant dirty_label_variant_from_string(const std::string& s);
MbVariant mb_variant_from_string(const std::string& s);

/// True for attacks whose objective is a backdoor (trigger-conditioned target).
bool is_backdoor(AttackType t);

/// A patch is stamped into every input channel at (row, col); `values` holds
/// height x width pixels row-major, or a single value broadcast to the patch.
/// A noise trigger adds amplitude * perturbation to the whole input, then
/// clips to [clip_min, clip_max].
struct TriggerDescriptor {
    TriggerKind kind = TriggerKind::patch;
    std::size_t row = 0, col = 0, height = 3, width = 3;
    std::vector<double> values{1.0};
    std::vector<double> perturbation;
    double amplitude = 0.0;
    double clip_min = -std::numeric_limits<double>::infinity();
    double clip_max = std::numeric_limits<double>::infinity();

    /// Throws ErrorKind::out_of_bounds when the trigger does not fit `shape`.
    void validate(const InputShape& shape) const;
    double value_at(std::size_t r, std::size_t c) const;
};

TriggerDescriptor trigger_from_json(const nlohmann::json& j);
nlohmann::json trigger_to_json(const TriggerDescriptor& t);

struct BlindConfig {
    /// Fixed weight of the clean loss; unset means per-step norm balancing.
    std::optional<double> clean_weight;
};

struct AttackSpec {
    AttackType type = AttackType::none;
    double noise_sigma = 0.3;
    DirtyLabelVariant dirty_variant = DirtyLabelVariant::fix_fix;
    double poisoned_fraction = 0.5;   // dirty-label share, or backdoor share per batch
    MbVariant mb_variant = MbVariant::unit;
    double mb_gamma_init = 10.0;
    std::string mb_target = "minmax";  // minmax | mkrum
    TriggerDescriptor trigger;
    int target_label = 0;
    double mra_scale = 10.0;
    std::size_t dba_parts = 4;
    BlindConfig blind;
    AttackType fra_base = AttackType::badnets;
    std::size_t attack_rounds = 0;   // 0 = every round from the start round on

    void validate() const;
};

// Update-space transforms.
LayeredParams add_noise(const LayeredParams& update, double sigma, Rng& rng);
LayeredParams sign_flip(const LayeredParams& update);
LayeredParams mra_scale(const LayeredParams& update, double scale);
/// Conv weights from the backdoor update, every other layer from the normal one.
LayeredParams fra_replace(const LayeredParams& backdoor, const LayeredParams& normal);

/// Label poisoning. Fix source set = {1..min(5, C-1)}, fixed target = min(3, C-1).
Dataset dirty_label(const Dataset& shard, DirtyLabelVariant variant, double fraction, Rng& rng);

/// Candidate acceptance predicate used by the MB gamma search.
using AcceptanceCheck = std::function<bool(const LayeredParams& candidate)>;

/// Min-max criterion: the candidate's largest distance to any draft does not
/// exceed the largest pairwise draft distance.
AcceptanceCheck minmax_acceptance(std::span<const LayeredParams> drafts);

struct MbResult {
    LayeredParams update;
    double gamma = 0.0;
};

/// mean - gamma * perturbation, with gamma halved from `gamma_init` until the
/// candidate passes `accept` (or gamma falls below 1e-6, then gamma = 0).
MbResult mb_attack(std::span<const LayeredParams> drafts, MbVariant variant, const AcceptanceCheck& accept,
                   double gamma_init = 10.0);
/// Perturbation direction for the variant: coordinate std ("unit") or sign(mean).
LayeredParams mb_direction(std::span<const LayeredParams> drafts, MbVariant variant);
LayeredParams coordinate_mean(std::span<const LayeredParams> updates);

// Triggers.
void stamp_trigger(std::span<double> sample, const TriggerDescriptor& trigger, const InputShape& shape);
/// Stamps the first ceil(fraction * rows) samples and relabels them to `target`.
void embed_trigger(Batch& batch, const TriggerDescriptor& trigger, const InputShape& shape, int target,
                   double fraction);
/// Splits a patch trigger into disjoint strips along its longer side; the
/// remainder goes to the last part.
std::vector<TriggerDescriptor> dba_split(const TriggerDescriptor& trigger, std::size_t parts);

/// Trojan evaluation set: every non-target sample, stamped.
Dataset make_trojan_set(const Dataset& clean, const TriggerDescriptor& trigger, const InputShape& shape, int target);

/// Poisoned training step that stamps a share of every batch (BadNets, DBA, MRA drafts).
StepGradient poisoned_step(const Architecture& arch, Loss loss, const TriggerDescriptor& trigger, int target,
                           double fraction);

/// Blend of clean and backdoor gradients. With balancing, the clean weight is
/// |g_b| / (|g_c| + |g_b|) so both terms contribute equal norm.
StepGradient blind_step(const Architecture& arch, Loss loss, const TriggerDescriptor& trigger, int target,
                        const BlindConfig& blind);

/// Zeroes the gradient of every non-conv layer, so training only moves the
/// feature extractor (FRA drafts: the classifier they are judged by is the benign one).
StepGradient conv_only(StepGradient inner);

LayeredParams blind_train(const Architecture& arch, const LayeredParams& global, const Dataset& shard,
                          const TriggerDescriptor& trigger, int target, const TrainConfig& cfg,
                          const BlindConfig& blind);

}  // namespace fedprov
