#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "contactforge/contact_map.hpp"
#include "contactforge/part_label.hpp"
#include "contactforge/tensor.hpp"

namespace contactforge {

// Shapes of the desk-scale detector: a small conv stack standing in for the
// backbone, an attention branch producing J+1 part logits, and a contact
// branch whose features are masked by each softmaxed part channel before a
// part-specific 3x3 conv.
struct HeadConfig {
    int input_channels = 1;
    std::vector<int> backbone_channels = {8, 8};  // 2..4 conv3x3 + ReLU layers
    int attention_hidden = 8;
    int contact_channels = 8;  // C
    int part_channels = 4;     // C'
    // Per-channel scale/shift after each decoder 3x3 conv, in place of batch
    // norm. Off means identity.
    bool affine_norm = false;

    int attended_channels() const { return part_channels * kNumClasses; }  // C* = C' (J+1)
    void check() const;
    bool operator==(const HeadConfig&) const = default;
};

struct AffineParams {
    std::vector<double> scale;
    std::vector<double> shift;
};

struct HeadParams {
    HeadConfig config;
    std::vector<ConvParams> backbone;
    ConvParams attention_conv;        // 3x3, backbone -> attention_hidden
    AffineParams attention_norm;
    ConvParams attention_classifier;  // 1x1, attention_hidden -> J+1
    ConvParams contact_conv;          // 3x3, backbone -> C
    AffineParams contact_norm;
    std::vector<ConvParams> part_convs;  // J+1 distinct 3x3, C -> C'
    AffineParams part_norm;              // over C*
    ConvParams classifier;               // 1x1, C* -> J+1

    // All zeros with the shapes implied by `config`.
    static HeadParams zeros(const HeadConfig& config);
    // Uniform in +-sqrt(6/fan_in) for weights and biases; affine scale 1,
    // shift 0.
    static HeadParams initialize(const HeadConfig& config, std::uint64_t seed);

    // Every parameter array in a fixed order with a stable name and shape.
    using Visitor = std::function<void(const std::string&, const std::vector<int>&, std::vector<double>&)>;
    using ConstVisitor =
        std::function<void(const std::string&, const std::vector<int>&, const std::vector<double>&)>;
    void for_each(const Visitor& fn);
    void for_each(const ConstVisitor& fn) const;
    std::size_t parameter_count() const;
};

// Per-pixel softmax over channels (max-subtracted). Throws on non-finite input.
Tensor softmax_channels(const Tensor& logits);

// For each j: Conv3x3_j(features * attention_j), concatenated in j order.
Tensor part_attend(const Tensor& features, const Tensor& attention, std::span<const ConvParams> part_convs);

struct HeadOutputs {
    Tensor attention_logits;  // H x W x (J+1)
    Tensor contact_logits;    // H x W x (J+1)
};

HeadOutputs forward(const HeadParams& params, const Tensor& input);

struct LossConfig {
    double lambda_a = 0.1;          // attention-branch weight while scheduled
    int lambda_a_epochs = 10;       // epochs 1..N use lambda_a, later ones 0
    double lambda_c = 1.0;
    double background_weight = 0.02;
    double foreground_weight = 1.0;
};

// lambda_a in effect during 1-based `epoch`.
double scheduled_lambda_a(const LossConfig& cfg, int epoch);

struct LossValue {
    double total = 0.0;
    double attention = 0.0;  // L_a
    double contact = 0.0;    // L_c
};

// Class-weighted cross-entropy, normalized by the summed pixel weights.
double weighted_cross_entropy(const Tensor& logits, const ContactMap& labels, const LossConfig& cfg);

// L = lambda_a * L_a + lambda_c * L_c using cfg.lambda_a as given.
LossValue loss(const Tensor& contact_logits, const Tensor& attention_logits, const ContactMap& gt_contact,
               const ContactMap& gt_parts, const LossConfig& cfg);

struct Sample {
    Tensor input;
    ContactMap contact;
    ContactMap parts;
};

// Pixels of every sample are pooled into one weighted mean per branch.
LossValue batch_loss(const HeadParams& params, std::span<const Sample> batch, const LossConfig& cfg);

struct GradientResult {
    LossValue loss;
    HeadParams grad;
};

GradientResult gradients(const HeadParams& params, std::span<const Sample> batch, const LossConfig& cfg);

// Bitmask of every ReLU that is active, in evaluation order. Two parameter
// settings with equal patterns lie in the same linear piece of the network.
std::vector<std::uint8_t> activation_pattern(const HeadParams& params, std::span<const Sample> batch);

// Argmax over channels; ties go to the lowest class id.
ContactMap argmax_map(const Tensor& logits);
ContactMap predict(const HeadParams& params, const Tensor& input);

struct TrainOptions {
    int epochs = 20;
    int batch_size = 24;
    double base_lr = 0.02;
    double poly_power = 0.9;
    std::uint64_t seed = 0;
    LossConfig loss;
    // Called after each iteration with (iteration, epoch, lr, loss).
    std::function<void(long, int, double, const LossValue&)> on_iteration;
};

// Plain gradient descent, lr = base_lr * (1 - iter/total)^power. Throws
// DivergenceError on a non-finite loss.
HeadParams train_toy(std::span<const Sample> dataset, const HeadConfig& config, const TrainOptions& options);

// Grayscale 0..255 -> single-channel tensor in [0, 1].
Tensor image_to_tensor(const GrayImage& image);

// Binary file: "CFHD", u32 LE header length, JSON header (version, config,
// tensor names and shapes), then little-endian float32 values.
inline constexpr int kCheckpointVersion = 1;
std::vector<std::uint8_t> serialize_checkpoint(const HeadParams& params);
HeadParams deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void write_checkpoint(const std::filesystem::path& path, const HeadParams& params);
HeadParams read_checkpoint(const std::filesystem::path& path);

struct GradCheckOptions {
    int height = 6;
    int width = 6;
    int batch = 2;
    double step = 1e-4;
    double abs_tol = 1e-4;
    double rel_tol = 1e-2;
};

struct GradCheckResult {
    std::size_t checked = 0;
    std::size_t failures = 0;
    // Parameters whose +-step probe crossed a ReLU boundary and were
    // re-probed with a smaller step inside one linear piece.
    std::size_t refined = 0;
    double max_abs_error = 0.0;
    std::string first_failure;
};

// Random model and batch from `seed`; every parameter is compared against a
// central finite difference of batch_loss.
GradCheckResult gradient_check(const HeadConfig& config, std::uint64_t seed, const GradCheckOptions& options = {});

}  // namespace contactforge
