#include "contactforge/part_attention.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "contactforge/error.hpp"

namespace contactforge {

namespace {

const char* kStage = "part-attention";
constexpr char kMagic[4] = {'C', 'F', 'H', 'D'};

// Uniform in [0, 1) from the raw engine output; identical on every platform.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void init_conv(ConvParams& conv, std::mt19937_64& rng) {
    // He-uniform: keeps activation variance roughly constant through the
    // ReLU stack and the 1/(J+1) attention masking.
    const double bound = std::sqrt(6.0 / static_cast<double>(conv.k * conv.k * conv.in));
    for (auto& w : conv.weight) w = (2.0 * uniform01(rng) - 1.0) * bound;
    for (auto& b : conv.bias) b = (2.0 * uniform01(rng) - 1.0) * bound;
}

AffineParams make_affine(int channels, bool enabled, double scale) {
    if (!enabled) return {};
    return {std::vector<double>(channels, scale), std::vector<double>(channels, 0.0)};
}

Tensor apply_affine(const Tensor& x, const AffineParams& a) {
    if (a.scale.empty()) return x;
    Tensor y = x;
    for (std::size_t p = 0; p < x.pixels(); ++p)
        for (int c = 0; c < x.channels; ++c) {
            const std::size_t i = p * x.channels + c;
            y.data[i] = a.scale[c] * x.data[i] + a.shift[c];
        }
    return y;
}

// grad_x = grad_y * scale, accumulating the scale/shift gradients.
Tensor affine_backward(const Tensor& x, const AffineParams& a, const Tensor& grad_y, AffineParams& grad) {
    if (a.scale.empty()) return grad_y;
    Tensor grad_x(x.height, x.width, x.channels);
    for (std::size_t p = 0; p < x.pixels(); ++p)
        for (int c = 0; c < x.channels; ++c) {
            const std::size_t i = p * x.channels + c;
            grad.scale[c] += grad_y.data[i] * x.data[i];
            grad.shift[c] += grad_y.data[i];
            grad_x.data[i] = grad_y.data[i] * a.scale[c];
        }
    return grad_x;
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.data) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& pre, Tensor grad) {
    for (std::size_t i = 0; i < grad.data.size(); ++i)
        if (!(pre.data[i] > 0.0)) grad.data[i] = 0.0;
    return grad;
}

void append_pattern(const Tensor& pre, std::vector<std::uint8_t>& out) {
    for (double v : pre.data) out.push_back(v > 0.0 ? 1 : 0);
}

struct ForwardCache {
    std::vector<Tensor> backbone_in;   // input of each backbone conv
    std::vector<Tensor> backbone_pre;  // conv output before ReLU
    Tensor shared;                     // backbone output

    Tensor att_conv, att_pre, att_act, att_logits, att_soft;
    Tensor f_conv, f_pre, features;
    Tensor part_conv, part_pre, part_act;
    Tensor contact_logits;
};

ForwardCache run_forward(const HeadParams& params, const Tensor& input) {
    if (input.channels != params.config.input_channels)
        throw InputError(kStage, "input has " + std::to_string(input.channels) + " channels, model expects " +
                                     std::to_string(params.config.input_channels));
    ForwardCache c;
    Tensor x = input;
    for (const auto& conv : params.backbone) {
        c.backbone_in.push_back(x);
        c.backbone_pre.push_back(conv_forward(x, conv));
        x = relu(c.backbone_pre.back());
    }
    c.shared = std::move(x);

    c.att_conv = conv_forward(c.shared, params.attention_conv);
    c.att_pre = apply_affine(c.att_conv, params.attention_norm);
    c.att_act = relu(c.att_pre);
    c.att_logits = conv_forward(c.att_act, params.attention_classifier);
    c.att_soft = softmax_channels(c.att_logits);

    c.f_conv = conv_forward(c.shared, params.contact_conv);
    c.f_pre = apply_affine(c.f_conv, params.contact_norm);
    c.features = relu(c.f_pre);

    c.part_conv = part_attend(c.features, c.att_soft, params.part_convs);
    c.part_pre = apply_affine(c.part_conv, params.part_norm);
    c.part_act = relu(c.part_pre);
    c.contact_logits = conv_forward(c.part_act, params.classifier);
    return c;
}

double class_weight(int label, const LossConfig& cfg) { return label == 0 ? cfg.background_weight : cfg.foreground_weight; }

void check_labels(const Tensor& logits, const ContactMap& labels) {
    if (logits.height != labels.height() || logits.width != labels.width())
        throw InputError(kStage, "label map and logits differ in spatial size");
    if (logits.channels != kNumClasses) throw InputError(kStage, "logits must have 18 channels");
    for (auto l : labels.labels())
        if (l > kNumParts) throw InputError(kStage, "label " + std::to_string(l) + " outside 0..17");
}

// Weighted negative log-likelihood sum and weight sum; optionally writes the
// unnormalized gradient w * (softmax - onehot) into grad.
void cross_entropy_terms(const Tensor& logits, const ContactMap& labels, const LossConfig& cfg, double& nll_sum,
                         double& weight_sum, Tensor* grad) {
    check_labels(logits, labels);
    const int k = logits.channels;
    std::vector<double> prob(k);
    for (std::size_t p = 0; p < logits.pixels(); ++p) {
        const double* z = logits.data.data() + p * k;
        const int y = labels.labels()[p];
        const double w = class_weight(y, cfg);
        const double zmax = *std::max_element(z, z + k);
        double sum = 0.0;
        for (int c = 0; c < k; ++c) sum += std::exp(z[c] - zmax);
        const double log_sum = std::log(sum) + zmax;
        nll_sum += w * (log_sum - z[y]);
        weight_sum += w;
        if (grad) {
            double* g = grad->data.data() + p * k;
            for (int c = 0; c < k; ++c) g[c] = w * (std::exp(z[c] - log_sum) - (c == y ? 1.0 : 0.0));
        }
    }
}

void check_sample(const HeadParams& params, const Sample& s) {
    if (s.input.channels != params.config.input_channels) throw InputError(kStage, "sample channel count mismatch");
    if (s.contact.width() != s.input.width || s.contact.height() != s.input.height || s.parts.width() != s.input.width ||
        s.parts.height() != s.input.height)
        throw InputError(kStage, "sample label maps do not match the input size");
}

LossValue combine(double nll_a, double w_a, double nll_c, double w_c, const LossConfig& cfg) {
    LossValue v;
    v.attention = w_a > 0.0 ? nll_a / w_a : 0.0;
    v.contact = w_c > 0.0 ? nll_c / w_c : 0.0;
    v.total = cfg.lambda_a * v.attention + cfg.lambda_c * v.contact;
    return v;
}

void add_scaled(HeadParams& dst, const HeadParams& src, double scale) {
    std::vector<const std::vector<double>*> from;
    src.for_each([&](const std::string&, const std::vector<int>&, const std::vector<double>& v) { from.push_back(&v); });
    std::size_t i = 0;
    dst.for_each([&](const std::string&, const std::vector<int>&, std::vector<double>& v) {
        const auto& f = *from[i++];
        for (std::size_t k = 0; k < v.size(); ++k) v[k] += scale * f[k];
    });
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(in[at + b]) << (8 * b);
    return v;
}

nlohmann::ordered_json config_to_json(const HeadConfig& c) {
    nlohmann::ordered_json j;
    j["input_channels"] = c.input_channels;
    j["backbone_channels"] = c.backbone_channels;
    j["attention_hidden"] = c.attention_hidden;
    j["contact_channels"] = c.contact_channels;
    j["part_channels"] = c.part_channels;
    j["affine_norm"] = c.affine_norm;
    return j;
}

HeadConfig config_from_json(const nlohmann::json& j) {
    HeadConfig c;
    c.input_channels = j.at("input_channels").get<int>();
    c.backbone_channels = j.at("backbone_channels").get<std::vector<int>>();
    c.attention_hidden = j.at("attention_hidden").get<int>();
    c.contact_channels = j.at("contact_channels").get<int>();
    c.part_channels = j.at("part_channels").get<int>();
    c.affine_norm = j.at("affine_norm").get<bool>();
    return c;
}

}  // namespace

void HeadConfig::check() const {
    if (input_channels < 1) throw InputError(kStage, "input_channels must be >= 1");
    if (backbone_channels.size() < 2 || backbone_channels.size() > 4)
        throw InputError(kStage, "backbone needs 2 to 4 conv layers");
    for (int c : backbone_channels)
        if (c < 1) throw InputError(kStage, "backbone channel counts must be >= 1");
    if (attention_hidden < 1 || contact_channels < 1 || part_channels < 1)
        throw InputError(kStage, "decoder channel counts must be >= 1");
}

HeadParams HeadParams::zeros(const HeadConfig& config) {
    config.check();
    HeadParams p;
    p.config = config;
    int in = config.input_channels;
    for (int c : config.backbone_channels) {
        p.backbone.emplace_back(in, c, 3);
        in = c;
    }
    p.attention_conv = ConvParams(in, config.attention_hidden, 3);
    p.attention_norm = make_affine(config.attention_hidden, config.affine_norm, 0.0);
    p.attention_classifier = ConvParams(config.attention_hidden, kNumClasses, 1);
    p.contact_conv = ConvParams(in, config.contact_channels, 3);
    p.contact_norm = make_affine(config.contact_channels, config.affine_norm, 0.0);
    for (int j = 0; j < kNumClasses; ++j) p.part_convs.emplace_back(config.contact_channels, config.part_channels, 3);
    p.part_norm = make_affine(config.attended_channels(), config.affine_norm, 0.0);
    p.classifier = ConvParams(config.attended_channels(), kNumClasses, 1);
    return p;
}

HeadParams HeadParams::initialize(const HeadConfig& config, std::uint64_t seed) {
    HeadParams p = zeros(config);
    std::mt19937_64 rng(seed);
    for (auto& conv : p.backbone) init_conv(conv, rng);
    init_conv(p.attention_conv, rng);
    init_conv(p.attention_classifier, rng);
    init_conv(p.contact_conv, rng);
    for (auto& conv : p.part_convs) init_conv(conv, rng);
    init_conv(p.classifier, rng);
    p.attention_norm = make_affine(config.attention_hidden, config.affine_norm, 1.0);
    p.contact_norm = make_affine(config.contact_channels, config.affine_norm, 1.0);
    p.part_norm = make_affine(config.attended_channels(), config.affine_norm, 1.0);
    return p;
}

void HeadParams::for_each(const Visitor& fn) {
    auto conv = [&](const std::string& name, ConvParams& c) {
        fn(name + ".weight", {c.out, c.k, c.k, c.in}, c.weight);
        fn(name + ".bias", {c.out}, c.bias);
    };
    auto affine = [&](const std::string& name, AffineParams& a) {
        if (a.scale.empty()) return;
        fn(name + ".scale", {static_cast<int>(a.scale.size())}, a.scale);
        fn(name + ".shift", {static_cast<int>(a.shift.size())}, a.shift);
    };
    for (std::size_t i = 0; i < backbone.size(); ++i) conv("backbone." + std::to_string(i), backbone[i]);
    conv("attention.conv", attention_conv);
    affine("attention.norm", attention_norm);
    conv("attention.classifier", attention_classifier);
    conv("contact.conv", contact_conv);
    affine("contact.norm", contact_norm);
    for (std::size_t j = 0; j < part_convs.size(); ++j) conv("part." + std::to_string(j), part_convs[j]);
    affine("part.norm", part_norm);
    conv("classifier", classifier);
}

void HeadParams::for_each(const ConstVisitor& fn) const {
    const_cast<HeadParams*>(this)->for_each(
        [&](const std::string& name, const std::vector<int>& shape, std::vector<double>& v) { fn(name, shape, v); });
}

std::size_t HeadParams::parameter_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const std::vector<int>&, const std::vector<double>& v) { n += v.size(); });
    return n;
}

Tensor softmax_channels(const Tensor& logits) {
    Tensor out(logits.height, logits.width, logits.channels);
    const int k = logits.channels;
    for (std::size_t p = 0; p < logits.pixels(); ++p) {
        const double* z = logits.data.data() + p * k;
        double* s = out.data.data() + p * k;
        double zmax = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (!std::isfinite(z[c])) throw InputError(kStage, "non-finite attention logit");
            zmax = std::max(zmax, z[c]);
        }
        double sum = 0.0;
        for (int c = 0; c < k; ++c) sum += (s[c] = std::exp(z[c] - zmax));
        for (int c = 0; c < k; ++c) s[c] /= sum;
    }
    return out;
}

Tensor part_attend(const Tensor& features, const Tensor& attention, std::span<const ConvParams> part_convs) {
    if (features.height != attention.height || features.width != attention.width)
        throw InputError(kStage, "features and attention differ in spatial size");
    if (static_cast<int>(part_convs.size()) != attention.channels)
        throw InputError(kStage, "need one part conv per attention channel");
    const int c_part = part_convs.empty() ? 0 : part_convs[0].out;
    Tensor out(features.height, features.width, c_part * attention.channels);
    Tensor masked(features.height, features.width, features.channels);
    for (int j = 0; j < attention.channels; ++j) {
        const ConvParams& conv = part_convs[j];
        if (conv.in != features.channels || conv.out != c_part)
            throw InputError(kStage, "part conv " + std::to_string(j) + " has inconsistent shape");
        for (std::size_t p = 0; p < features.pixels(); ++p) {
            const double a = attention.data[p * attention.channels + j];
            for (int c = 0; c < features.channels; ++c)
                masked.data[p * features.channels + c] = features.data[p * features.channels + c] * a;
        }
        const Tensor part = conv_forward(masked, conv);
        for (std::size_t p = 0; p < features.pixels(); ++p)
            std::copy_n(part.data.data() + p * c_part, c_part, out.data.data() + p * out.channels + j * c_part);
    }
    return out;
}

HeadOutputs forward(const HeadParams& params, const Tensor& input) {
    ForwardCache c = run_forward(params, input);
    return {std::move(c.att_logits), std::move(c.contact_logits)};
}

double scheduled_lambda_a(const LossConfig& cfg, int epoch) { return epoch <= cfg.lambda_a_epochs ? cfg.lambda_a : 0.0; }

double weighted_cross_entropy(const Tensor& logits, const ContactMap& labels, const LossConfig& cfg) {
    double nll = 0.0, w = 0.0;
    cross_entropy_terms(logits, labels, cfg, nll, w, nullptr);
    return w > 0.0 ? nll / w : 0.0;
}

LossValue loss(const Tensor& contact_logits, const Tensor& attention_logits, const ContactMap& gt_contact,
               const ContactMap& gt_parts, const LossConfig& cfg) {
    double nll_a = 0.0, w_a = 0.0, nll_c = 0.0, w_c = 0.0;
    cross_entropy_terms(attention_logits, gt_parts, cfg, nll_a, w_a, nullptr);
    cross_entropy_terms(contact_logits, gt_contact, cfg, nll_c, w_c, nullptr);
    return combine(nll_a, w_a, nll_c, w_c, cfg);
}

LossValue batch_loss(const HeadParams& params, std::span<const Sample> batch, const LossConfig& cfg) {
    double nll_a = 0.0, w_a = 0.0, nll_c = 0.0, w_c = 0.0;
    for (const auto& s : batch) {
        check_sample(params, s);
        const HeadOutputs out = forward(params, s.input);
        cross_entropy_terms(out.attention_logits, s.parts, cfg, nll_a, w_a, nullptr);
        cross_entropy_terms(out.contact_logits, s.contact, cfg, nll_c, w_c, nullptr);
    }
    return combine(nll_a, w_a, nll_c, w_c, cfg);
}

GradientResult gradients(const HeadParams& params, std::span<const Sample> batch, const LossConfig& cfg) {
    if (batch.empty()) throw InputError(kStage, "empty batch");
    std::vector<ForwardCache> caches;
    std::vector<Tensor> d_att, d_contact;
    double nll_a = 0.0, w_a = 0.0, nll_c = 0.0, w_c = 0.0;
    for (const auto& s : batch) {
        check_sample(params, s);
        caches.push_back(run_forward(params, s.input));
        const ForwardCache& c = caches.back();
        d_att.emplace_back(c.att_logits.height, c.att_logits.width, kNumClasses);
        d_contact.emplace_back(c.contact_logits.height, c.contact_logits.width, kNumClasses);
        cross_entropy_terms(c.att_logits, s.parts, cfg, nll_a, w_a, &d_att.back());
        cross_entropy_terms(c.contact_logits, s.contact, cfg, nll_c, w_c, &d_contact.back());
    }

    GradientResult result{combine(nll_a, w_a, nll_c, w_c, cfg), HeadParams::zeros(params.config)};
    HeadParams& g = result.grad;
    const double scale_a = w_a > 0.0 ? cfg.lambda_a / w_a : 0.0;
    const double scale_c = w_c > 0.0 ? cfg.lambda_c / w_c : 0.0;
    const int C = params.config.contact_channels;
    const int Cp = params.config.part_channels;

    for (std::size_t b = 0; b < batch.size(); ++b) {
        const ForwardCache& c = caches[b];
        Tensor& g_att_logits = d_att[b];
        Tensor& g_logits = d_contact[b];
        for (auto& v : g_att_logits.data) v *= scale_a;
        for (auto& v : g_logits.data) v *= scale_c;

        // Contact branch: classifier -> ReLU -> norm -> part convs.
        Tensor g_part_act(c.part_act.height, c.part_act.width, c.part_act.channels);
        conv_backward(c.part_act, params.classifier, g_logits, g.classifier, &g_part_act);
        const Tensor g_part_pre = relu_backward(c.part_pre, std::move(g_part_act));
        const Tensor g_part_conv = affine_backward(c.part_conv, params.part_norm, g_part_pre, g.part_norm);

        Tensor g_features(c.features.height, c.features.width, C);
        Tensor g_att_soft(c.att_soft.height, c.att_soft.width, kNumClasses);
        Tensor masked(c.features.height, c.features.width, C);
        Tensor g_slice(c.features.height, c.features.width, Cp);
        for (int j = 0; j < kNumClasses; ++j) {
            for (std::size_t p = 0; p < c.features.pixels(); ++p) {
                const double a = c.att_soft.data[p * kNumClasses + j];
                for (int ch = 0; ch < C; ++ch) masked.data[p * C + ch] = c.features.data[p * C + ch] * a;
                std::copy_n(g_part_conv.data.data() + p * g_part_conv.channels + j * Cp, Cp, g_slice.data.data() + p * Cp);
            }
            Tensor g_masked(c.features.height, c.features.width, C);
            conv_backward(masked, params.part_convs[j], g_slice, g.part_convs[j], &g_masked);
            for (std::size_t p = 0; p < c.features.pixels(); ++p) {
                const double a = c.att_soft.data[p * kNumClasses + j];
                double ga = 0.0;
                for (int ch = 0; ch < C; ++ch) {
                    const double gm = g_masked.data[p * C + ch];
                    g_features.data[p * C + ch] += gm * a;
                    ga += gm * c.features.data[p * C + ch];
                }
                g_att_soft.data[p * kNumClasses + j] += ga;
            }
        }

        // Softmax Jacobian: dz_k = s_k (ds_k - sum_m s_m ds_m).
        for (std::size_t p = 0; p < c.att_soft.pixels(); ++p) {
            const double* s = c.att_soft.data.data() + p * kNumClasses;
            const double* ds = g_att_soft.data.data() + p * kNumClasses;
            double inner = 0.0;
            for (int k = 0; k < kNumClasses; ++k) inner += s[k] * ds[k];
            double* dz = g_att_logits.data.data() + p * kNumClasses;
            for (int k = 0; k < kNumClasses; ++k) dz[k] += s[k] * (ds[k] - inner);
        }

        Tensor g_shared(c.shared.height, c.shared.width, c.shared.channels);

        Tensor g_att_act(c.att_act.height, c.att_act.width, c.att_act.channels);
        conv_backward(c.att_act, params.attention_classifier, g_att_logits, g.attention_classifier, &g_att_act);
        const Tensor g_att_pre = relu_backward(c.att_pre, std::move(g_att_act));
        const Tensor g_att_conv = affine_backward(c.att_conv, params.attention_norm, g_att_pre, g.attention_norm);
        conv_backward(c.shared, params.attention_conv, g_att_conv, g.attention_conv, &g_shared);

        const Tensor g_f_pre = relu_backward(c.f_pre, std::move(g_features));
        const Tensor g_f_conv = affine_backward(c.f_conv, params.contact_norm, g_f_pre, g.contact_norm);
        conv_backward(c.shared, params.contact_conv, g_f_conv, g.contact_conv, &g_shared);

        Tensor g_act = std::move(g_shared);
        for (std::size_t l = params.backbone.size(); l-- > 0;) {
            const Tensor g_pre = relu_backward(c.backbone_pre[l], std::move(g_act));
            Tensor g_in(c.backbone_in[l].height, c.backbone_in[l].width, c.backbone_in[l].channels);
            conv_backward(c.backbone_in[l], params.backbone[l], g_pre, g.backbone[l], l > 0 ? &g_in : nullptr);
            g_act = std::move(g_in);
        }
    }
    return result;
}

std::vector<std::uint8_t> activation_pattern(const HeadParams& params, std::span<const Sample> batch) {
    std::vector<std::uint8_t> out;
    for (const auto& s : batch) {
        const ForwardCache c = run_forward(params, s.input);
        for (const auto& pre : c.backbone_pre) append_pattern(pre, out);
        append_pattern(c.att_pre, out);
        append_pattern(c.f_pre, out);
        append_pattern(c.part_pre, out);
    }
    return out;
}

ContactMap argmax_map(const Tensor& logits) {
    if (logits.channels != kNumClasses) throw InputError(kStage, "logits must have 18 channels");
    ContactMap map(logits.width, logits.height);
    std::vector<std::uint8_t> labels(logits.pixels());
    for (std::size_t p = 0; p < logits.pixels(); ++p) {
        const double* z = logits.data.data() + p * kNumClasses;
        // max_element keeps the first of equal maxima.
        labels[p] = static_cast<std::uint8_t>(std::max_element(z, z + kNumClasses) - z);
    }
    map.assign(std::move(labels));
    return map;
}

ContactMap predict(const HeadParams& params, const Tensor& input) { return argmax_map(forward(params, input).contact_logits); }

HeadParams train_toy(std::span<const Sample> dataset, const HeadConfig& config, const TrainOptions& options) {
    if (dataset.empty()) throw InputError(kStage, "training set is empty");
    if (options.epochs < 1) throw InputError(kStage, "epochs must be >= 1");
    HeadParams params = HeadParams::initialize(config, options.seed);
    for (const auto& s : dataset) check_sample(params, s);

    const std::size_t n = dataset.size();
    const std::size_t batch_size = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, options.batch_size)), 1, n);
    const std::size_t per_epoch = (n + batch_size - 1) / batch_size;
    const long total = static_cast<long>(per_epoch) * options.epochs;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
    LossConfig cfg = options.loss;
    long iter = 0;
    std::vector<Sample> batch;
    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        cfg.lambda_a = scheduled_lambda_a(options.loss, epoch);
        if (batch_size < n)
            for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
        for (std::size_t start = 0; start < n; start += batch_size, ++iter) {
            batch.clear();
            for (std::size_t i = start; i < std::min(n, start + batch_size); ++i) batch.push_back(dataset[order[i]]);
            const double lr =
                options.base_lr * std::pow(1.0 - static_cast<double>(iter) / static_cast<double>(total), options.poly_power);
            GradientResult step;
            try {
                step = gradients(params, batch, cfg);
            } catch (const InputError&) {
                // Samples were validated up front, so this is overflow in the
                // activations (e.g. non-finite attention logits).
                throw DivergenceError(iter, "activations became non-finite at iteration " + std::to_string(iter));
            }
            if (!std::isfinite(step.loss.total))
                throw DivergenceError(iter, "loss became non-finite at iteration " + std::to_string(iter));
            add_scaled(params, step.grad, -lr);
            if (options.on_iteration) options.on_iteration(iter, epoch, lr, step.loss);
        }
    }
    return params;
}

Tensor image_to_tensor(const GrayImage& image) {
    Tensor t(image.height, image.width, 1);
    for (std::size_t i = 0; i < image.pixels.size(); ++i) t.data[i] = image.pixels[i] / 255.0;
    return t;
}

std::vector<std::uint8_t> serialize_checkpoint(const HeadParams& params) {
    nlohmann::ordered_json header;
    header["format"] = "contactforge-head";
    header["version"] = kCheckpointVersion;
    header["config"] = config_to_json(params.config);
    header["tensors"] = nlohmann::ordered_json::array();
    std::size_t count = 0;
    params.for_each([&](const std::string& name, const std::vector<int>& shape, const std::vector<double>& v) {
        header["tensors"].push_back({{"name", name}, {"shape", shape}});
        count += v.size();
    });
    const std::string text = header.dump();

    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    out.reserve(out.size() + 4 * count);
    params.for_each([&](const std::string&, const std::vector<int>&, const std::vector<double>& v) {
        for (double x : v) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    });
    return out;
}

HeadParams deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw InputError(kStage, "not a contactforge checkpoint");
    const std::uint32_t header_len = get_u32(bytes, 4);
    if (bytes.size() < 8ull + header_len) throw InputError(kStage, "truncated checkpoint header");
    nlohmann::json header;
    HeadConfig config;
    try {
        header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + header_len);
        if (!header.contains("version")) throw InputError(kStage, "checkpoint header has no version");
        const int version = header.at("version").get<int>();
        if (version != kCheckpointVersion)
            throw InputError(kStage, "unsupported checkpoint version " + std::to_string(version));
        config = config_from_json(header.at("config"));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(kStage, std::string("bad checkpoint header: ") + e.what());
    }

    HeadParams params = HeadParams::zeros(config);
    const auto& tensors = header.at("tensors");
    std::size_t t = 0;
    std::size_t at = 8 + header_len;
    params.for_each([&](const std::string& name, const std::vector<int>& shape, std::vector<double>& v) {
        if (t >= tensors.size() || tensors[t].at("name").get<std::string>() != name ||
            tensors[t].at("shape").get<std::vector<int>>() != shape)
            throw InputError(kStage, "checkpoint tensor list does not match its config at '" + name + "'");
        ++t;
        if (bytes.size() < at + 4 * v.size()) throw InputError(kStage, "truncated checkpoint data");
        for (auto& x : v) {
            x = static_cast<double>(std::bit_cast<float>(get_u32(bytes, at)));
            at += 4;
        }
    });
    if (t != tensors.size() || at != bytes.size()) throw InputError(kStage, "checkpoint has trailing tensors or bytes");
    return params;
}

void write_checkpoint(const std::filesystem::path& path, const HeadParams& params) {
    const auto bytes = serialize_checkpoint(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError(kStage, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

HeadParams read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(kStage, "cannot open checkpoint " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

GradCheckResult gradient_check(const HeadConfig& config, std::uint64_t seed, const GradCheckOptions& options) {
    HeadParams params = HeadParams::initialize(config, seed);
    std::mt19937_64 rng(seed + 1);
    if (config.affine_norm) {
        for (auto* a : {&params.attention_norm, &params.contact_norm, &params.part_norm}) {
            for (auto& s : a->scale) s = 0.5 + uniform01(rng);
            for (auto& s : a->shift) s = 0.2 * (uniform01(rng) - 0.5);
        }
    }
    std::vector<Sample> batch;
    for (int b = 0; b < options.batch; ++b) {
        Sample s{Tensor(options.height, options.width, config.input_channels), ContactMap(options.width, options.height),
                 ContactMap(options.width, options.height)};
        for (auto& v : s.input.data) v = uniform01(rng);
        std::vector<std::uint8_t> contact(s.contact.size()), parts(s.parts.size());
        for (auto& l : contact) l = static_cast<std::uint8_t>(rng() % kNumClasses);
        for (auto& l : parts) l = static_cast<std::uint8_t>(rng() % kNumClasses);
        s.contact.assign(std::move(contact));
        s.parts.assign(std::move(parts));
        batch.push_back(std::move(s));
    }
    LossConfig cfg;  // lambda_a = 0.1, lambda_c = 1: both branches contribute

    const GradientResult analytic = gradients(params, batch, cfg);
    const auto base_pattern = activation_pattern(params, batch);

    std::vector<const std::vector<double>*> grads;
    analytic.grad.for_each(
        [&](const std::string&, const std::vector<int>&, const std::vector<double>& v) { grads.push_back(&v); });

    GradCheckResult result;
    std::size_t tensor = 0;
    params.for_each([&](const std::string& name, const std::vector<int>&, std::vector<double>& values) {
        const auto& g = *grads[tensor++];
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double original = values[i];
            double step = options.step;
            double numeric = 0.0;
            for (;;) {
                values[i] = original + step;
                const double plus = batch_loss(params, batch, cfg).total;
                const bool same_plus = activation_pattern(params, batch) == base_pattern;
                values[i] = original - step;
                const double minus = batch_loss(params, batch, cfg).total;
                const bool same_minus = activation_pattern(params, batch) == base_pattern;
                numeric = (plus - minus) / (2.0 * step);
                if ((same_plus && same_minus) || step < 1e-9) break;
                step *= 0.1;
            }
            values[i] = original;
            if (step != options.step) ++result.refined;
            const double err = std::abs(numeric - g[i]);
            result.max_abs_error = std::max(result.max_abs_error, err);
            ++result.checked;
            if (err > std::max(options.abs_tol, options.rel_tol * std::abs(g[i]))) {
                if (result.failures++ == 0)
                    result.first_failure = name + "[" + std::to_string(i) + "]: analytic " + std::to_string(g[i]) +
                                           " numeric " + std::to_string(numeric);
            }
        }
    });
    return result;
}

}  // namespace contactforge
