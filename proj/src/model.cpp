#include "scnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scnet/kernels/kernels.hpp"

namespace scnet {
namespace {

std::string indexed(const std::string& prefix, int i) { return prefix + std::to_string(i); }

template <typename T>
std::vector<Tensor<T>> split_unit_channels(const Tensor<T>& t) {
    const std::vector<int> ones(static_cast<std::size_t>(t.channels()), 1);
    return split_channels(t, std::span<const int>(ones));
}

}  // namespace

template <typename T>
T probability_from_logit(T logit) noexcept {
    const T p = kernels::sigmoid(logit);
    return std::clamp(p, std::nextafter(T{0}, T{1}), std::nextafter(T{1}, T{0}));
}

template <typename T>
BasicModel<T>::BasicModel(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    const int scales = config_.num_scales;
    const auto& ch = config_.encoder_channels;
    const int side_ch = config_.attention_out_channels;
    const bool norm = config_.use_instance_norm;

    for (int s = 0; s < scales; ++s) {
        EncoderBlock block;
        const std::string name = indexed("encoder.block", s + 1);
        int in = s == 0 ? config_.input_channels : ch[s - 1];
        for (int u = 0; u < config_.convs_per_block[s]; ++u) {
            block.units.push_back(
                ConvUnit<T>::create(params_, indexed(name + ".unit", u + 1), in, ch[s], norm));
            in = ch[s];
        }
        if (config_.attention_in_encoder)
            block.attention = Attention<T>::create(params_, indexed("encoder.attention", s + 1), ch[s],
                                                   side_ch, config_.use_scalar_weight_variant);
        else
            block.side_projection =
                Conv2d<T>::create(params_, indexed("encoder.side", s + 1), ch[s], side_ch, 1);
        encoder_.push_back(std::move(block));
    }

    for (int s = 0; s < scales; ++s)
        enhancement_.push_back(
            Conv2d<T>::create(params_, indexed("enhancement.proj", s + 1), side_ch, 1, 1));

    for (int j = 0; j < scales; ++j) {
        const int s = scales - 1 - j;
        DecoderBlock block;
        const std::string name = indexed("decoder.block", j + 1);
        const int units = config_.convs_per_block[s];
        const int out_last = s > 0 ? ch[s - 1] : ch[0];
        for (int u = 0; u < units; ++u) {
            const int out = u + 1 == units ? out_last : ch[s];
            block.units.push_back(
                ConvUnit<T>::create(params_, indexed(name + ".unit", u + 1), ch[s], out, norm));
        }
        if (config_.attention_in_decoder)
            block.attention = Attention<T>::create(params_, indexed("decoder.attention", j + 1),
                                                   out_last, side_ch,
                                                   config_.use_scalar_weight_variant);
        else
            block.side_projection =
                Conv2d<T>::create(params_, indexed("decoder.side", j + 1), out_last, side_ch, 1);
        if (side_ch != 1)
            block.to_single_channel =
                Conv2d<T>::create(params_, indexed("decoder.side_reduce", j + 1), side_ch, 1, 1);
        decoder_.push_back(std::move(block));
    }

    for (int k = 1; k <= scales; ++k) {
        const std::string name = indexed("fused.stage", k);
        fused_.push_back(FusedStage{
            Conv2d<T>::create(params_, name + ".conv", fused_stage_in_channels(k), 1, 1),
            ConvTranspose2d<T>::create(params_, name + ".upsample", 1, 1 << (k - 1))});
    }
    final_fusion_ = Conv2d<T>::create(params_, "fused.final", final_fusion_in_channels(), 1, 1);
}

template <typename T>
int BasicModel<T>::fused_stage_in_channels(int stage) const {
    if (stage < 1 || stage > config_.num_scales)
        throw ShapeError("fused stage " + std::to_string(stage) + " out of range");
    return stage + 1;
}

template <typename T>
void BasicModel<T>::check_input(const Shape& s) const {
    if (s.channels != config_.input_channels)
        throw ShapeError("model expects " + std::to_string(config_.input_channels) +
                         "-channel input, got " + to_string(s));
    const int m = config_.size_multiple();
    if (s.height % m != 0 || s.width % m != 0)
        throw ShapeError("input " + to_string(s) + " is not divisible by " + std::to_string(m));
}

template <typename T>
EncoderState<T> BasicModel<T>::run_encoder(const Tensor<T>& input, ForwardTrace<T>* trace) const {
    check_input(input.shape());
    EncoderState<T> state;
    if (trace) trace->encoder.resize(encoder_.size());
    Tensor<T> x = input;
    for (std::size_t s = 0; s < encoder_.size(); ++s) {
        const EncoderBlock& block = encoder_[s];
        auto* bt = trace ? &trace->encoder[s] : nullptr;
        if (bt) bt->units.resize(block.units.size());
        for (std::size_t u = 0; u < block.units.size(); ++u)
            x = block.units[u].forward(params_, x, bt ? &bt->units[u] : nullptr);

        state.pre_pool_shapes.push_back(x.shape());
        auto pooled = kernels::max_pool2x2(x);
        Tensor<T> side;
        if (block.attention) {
            AttentionTrace<T>* at = nullptr;
            if (bt) at = &bt->attention.emplace();
            auto out = block.attention->forward(params_, pooled.output, at);
            x = std::move(out.gated);
            side = std::move(out.refined);
        } else {
            x = std::move(pooled.output);
            side = block.side_projection->forward(params_, x);
            if (bt) bt->pooled = x;
        }
        if (bt) {
            bt->pre_pool = state.pre_pool_shapes.back();
            bt->indices = pooled.indices;
        }
        state.trunk.push_back(x);
        state.pool_indices.push_back(std::move(pooled.indices));
        state.side.push_back(std::move(side));
    }
    return state;
}

template <typename T>
std::vector<Tensor<T>> BasicModel<T>::run_enhancement(const EncoderState<T>& state,
                                                      ForwardTrace<T>* trace) const {
    const std::size_t scales = enhancement_.size();
    if (state.side.size() != scales) throw ShapeError("enhancement: incomplete encoder state");
    // Deepest map first; each shallower level adds the upsampled running sum.
    std::vector<Tensor<T>> sums(scales);
    sums[scales - 1] = state.side[scales - 1];
    for (std::size_t s = scales - 1; s-- > 0;) {
        const Tensor<T>& here = state.side[s];
        sums[s] = here;
        add_inplace(sums[s], kernels::resize_bilinear(sums[s + 1], here.height(), here.width()));
    }
    std::vector<Tensor<T>> maps;
    for (std::size_t s = 0; s < scales; ++s) maps.push_back(enhancement_[s].forward(params_, sums[s]));
    if (trace) trace->enhancement_sums = std::move(sums);
    return maps;
}

template <typename T>
std::vector<Tensor<T>> BasicModel<T>::run_decoder(const EncoderState<T>& state,
                                                  ForwardTrace<T>* trace) const {
    const int scales = config_.num_scales;
    if (static_cast<int>(state.pool_indices.size()) != scales ||
        static_cast<int>(state.pre_pool_shapes.size()) != scales || state.trunk.empty())
        throw ShapeError("decoder: missing pooling indices");
    if (trace) trace->decoder.resize(decoder_.size());
    std::vector<Tensor<T>> maps;
    Tensor<T> t = state.trunk.back();
    for (int j = 0; j < scales; ++j) {
        const int s = scales - 1 - j;
        const DecoderBlock& block = decoder_[j];
        auto* bt = trace ? &trace->decoder[j] : nullptr;
        Tensor<T> u = kernels::max_unpool2x2(t, state.pool_indices[s], state.pre_pool_shapes[s]);
        if (bt) bt->units.resize(block.units.size());
        for (std::size_t k = 0; k < block.units.size(); ++k)
            u = block.units[k].forward(params_, u, bt ? &bt->units[k] : nullptr);

        Tensor<T> side;
        if (block.attention) {
            AttentionTrace<T>* at = nullptr;
            if (bt) at = &bt->attention.emplace();
            auto out = block.attention->forward(params_, u, at);
            side = std::move(out.refined);
            t = std::move(out.gated);
        } else {
            side = block.side_projection->forward(params_, u);
            if (bt) bt->block_output = u;
            t = std::move(u);
        }
        if (block.to_single_channel) {
            if (bt) bt->side = side;
            maps.push_back(block.to_single_channel->forward(params_, side));
        } else {
            maps.push_back(std::move(side));
        }
    }
    return maps;
}

template <typename T>
EncoderState<T> BasicModel<T>::encoder_forward(const Tensor<T>& input) const {
    return run_encoder(input, nullptr);
}

template <typename T>
std::vector<Tensor<T>> BasicModel<T>::enhancement_forward(const EncoderState<T>& state) const {
    return run_enhancement(state, nullptr);
}

template <typename T>
std::vector<Tensor<T>> BasicModel<T>::decoder_forward(const EncoderState<T>& state) const {
    return run_decoder(state, nullptr);
}

template <typename T>
ForwardOutput<T> BasicModel<T>::run(const Tensor<T>& input, ForwardTrace<T>* trace) const {
    const int scales = config_.num_scales;
    const int h = input.height();
    const int w = input.width();
    if (trace) trace->input_shape = input.shape();

    const EncoderState<T> state = run_encoder(input, trace);
    ForwardOutput<T> out;
    out.enhancement_maps = run_enhancement(state, trace);
    out.decoder_maps = run_decoder(state, trace);

    std::vector<Tensor<T>> stage_out;
    if (trace) trace->fused.resize(fused_.size());
    for (int k = 1; k <= scales; ++k) {
        const Tensor<T>& enh = out.enhancement_maps[k - 1];
        const Tensor<T>& dec = out.decoder_maps[scales - k];
        const int sh = dec.height();
        const int sw = dec.width();
        std::vector<Tensor<T>> resized;
        resized.reserve(static_cast<std::size_t>(k));
        resized.push_back(kernels::resize_bilinear(enh, sh, sw));
        for (int i = 0; i < k - 1; ++i) resized.push_back(kernels::resize_bilinear(stage_out[i], sh, sw));
        std::vector<const Tensor<T>*> parts{&resized[0], &dec};
        for (int i = 1; i < k; ++i) parts.push_back(&resized[i]);
        Tensor<T> concat = concat_channels<T>(parts);
        if (concat.channels() != fused_stage_in_channels(k))
            throw ShapeError("fused stage " + std::to_string(k) + " expects " +
                             std::to_string(fused_stage_in_channels(k)) + " channels, got " +
                             std::to_string(concat.channels()));
        const FusedStage& stage = fused_[k - 1];
        Tensor<T> reduced = stage.conv.forward(params_, concat);
        Tensor<T> full = stage.upsample.forward(params_, reduced);
        if (full.height() != h || full.width() != w)
            throw ShapeError("fused stage " + std::to_string(k) + " produced " +
                             to_string(full.shape()));
        if (trace) {
            auto& ft = trace->fused[k - 1];
            ft.concat = std::move(concat);
            ft.reduced = std::move(reduced);
            ft.enhancement_shape = enh.shape();
        }
        stage_out.push_back(std::move(full));
    }

    std::vector<const Tensor<T>*> all;
    for (const auto& s : stage_out) all.push_back(&s);
    Tensor<T> final_in = concat_channels<T>(all);
    out.fused_logits = final_fusion_.forward(params_, final_in);
    if (trace) trace->final_concat = std::move(final_in);

    out.side_logits.resize(static_cast<std::size_t>(scales));
    for (int k = 1; k <= scales; ++k) out.side_logits[scales - k] = std::move(stage_out[k - 1]);
    auto to_prob = [](const Tensor<T>& logits) {
        Tensor<T> p(logits.shape());
        auto src = logits.values();
        auto dst = p.values();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = probability_from_logit(src[i]);
        return p;
    };
    for (const auto& l : out.side_logits) out.side_probs.push_back(to_prob(l));
    out.fused_prob = to_prob(out.fused_logits);
    return out;
}

template <typename T>
ForwardOutput<T> BasicModel<T>::forward(const Tensor<T>& input) const {
    return run(input, nullptr);
}

template <typename T>
ForwardOutput<T> BasicModel<T>::forward(const Tensor<T>& input, ForwardTrace<T>& trace) const {
    trace = ForwardTrace<T>{};
    return run(input, &trace);
}

template <typename T>
void BasicModel<T>::backward(const ForwardTrace<T>& trace, const OutputGradients<T>& og,
                             ParameterSet<T>& grads) const {
    const int scales = config_.num_scales;
    if (!grads.same_layout(params_)) throw ShapeError("backward: gradient layout mismatch");
    if (static_cast<int>(og.side_logits.size()) != scales)
        throw ShapeError("backward: expected one side gradient per scale");
    const Shape full{1, trace.input_shape.height, trace.input_shape.width};

    std::vector<Tensor<T>> d_stage =
        split_unit_channels(final_fusion_.backward(params_, grads, trace.final_concat, og.fused_logits));
    for (int k = 1; k <= scales; ++k) add_inplace(d_stage[k - 1], og.side_logits[scales - k]);

    std::vector<Tensor<T>> d_enh(static_cast<std::size_t>(scales));
    std::vector<Tensor<T>> d_dec(static_cast<std::size_t>(scales));
    for (int k = scales; k >= 1; --k) {
        const auto& ft = trace.fused[k - 1];
        const FusedStage& stage = fused_[k - 1];
        Tensor<T> dz = stage.upsample.backward(params_, grads, ft.reduced, d_stage[k - 1]);
        auto parts = split_unit_channels(stage.conv.backward(params_, grads, ft.concat, dz));
        d_enh[k - 1] = kernels::resize_bilinear_backward(parts[0], ft.enhancement_shape);
        d_dec[scales - k] = std::move(parts[1]);
        for (int i = 0; i < k - 1; ++i)
            add_inplace(d_stage[i], kernels::resize_bilinear_backward(parts[2 + i], full));
    }

    // Decoder, last stage first. The last stage's trunk output is unused.
    std::optional<Tensor<T>> d_trunk;
    for (int j = scales - 1; j >= 0; --j) {
        const DecoderBlock& block = decoder_[j];
        const auto& bt = trace.decoder[j];
        Tensor<T> d_side = block.to_single_channel
                               ? block.to_single_channel->backward(params_, grads, bt.side, d_dec[j])
                               : std::move(d_dec[j]);
        Tensor<T> d_u;
        if (block.attention) {
            Tensor<T> d_gated = d_trunk ? std::move(*d_trunk) : Tensor<T>(bt.attention->gated.shape());
            d_u = block.attention->backward(params_, grads, *bt.attention, std::move(d_gated), d_side);
        } else {
            d_u = block.side_projection->backward(params_, grads, bt.block_output, d_side);
            if (d_trunk) add_inplace(d_u, *d_trunk);
        }
        for (std::size_t u = block.units.size(); u-- > 0;)
            d_u = block.units[u].backward(params_, grads, bt.units[u], std::move(d_u));
        d_trunk = kernels::max_unpool2x2_backward(d_u, trace.encoder[scales - 1 - j].indices);
    }

    // Enhancement path, shallow to deep: each level's running sum also fed the
    // next shallower level through upsampling.
    std::vector<Tensor<T>> d_sum(static_cast<std::size_t>(scales));
    for (int s = 0; s < scales; ++s) {
        d_sum[s] = enhancement_[s].backward(params_, grads, trace.enhancement_sums[s], d_enh[s]);
        if (s > 0)
            add_inplace(d_sum[s], kernels::resize_bilinear_backward(
                                      d_sum[s - 1], trace.enhancement_sums[s].shape()));
    }

    Tensor<T> d_x = std::move(*d_trunk);
    for (int s = scales - 1; s >= 0; --s) {
        const EncoderBlock& block = encoder_[s];
        const auto& bt = trace.encoder[s];
        Tensor<T> d_pooled;
        if (block.attention) {
            d_pooled = block.attention->backward(params_, grads, *bt.attention, std::move(d_x), d_sum[s]);
        } else {
            d_pooled = block.side_projection->backward(params_, grads, bt.pooled, d_sum[s]);
            add_inplace(d_pooled, d_x);
        }
        d_x = kernels::max_pool2x2_backward(d_pooled, bt.indices, bt.pre_pool);
        for (std::size_t u = block.units.size(); u-- > 0;)
            d_x = block.units[u].backward(params_, grads, bt.units[u], std::move(d_x));
    }
}

ForwardOutput<float> predict_padded(const Model& model, const FeatureMap& input) {
    const int m = model.config().size_multiple();
    const int h = input.height();
    const int w = input.width();
    const int ph = (h + m - 1) / m * m;
    const int pw = (w + m - 1) / m * m;
    if (ph == h && pw == w) return model.forward(input);

    const int top = (ph - h) / 2;
    const int left = (pw - w) / 2;
    FeatureMap padded(input.channels(), ph, pw);
    for (int c = 0; c < input.channels(); ++c)
        for (int y = 0; y < ph; ++y)
            for (int x = 0; x < pw; ++x)
                padded(c, y, x) = input(c, std::clamp(y - top, 0, h - 1), std::clamp(x - left, 0, w - 1));

    auto out = model.forward(padded);
    auto crop = [&](const FeatureMap& t) {
        FeatureMap c(t.channels(), h, w);
        for (int ch = 0; ch < t.channels(); ++ch)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) c(ch, y, x) = t(ch, y + top, x + left);
        return c;
    };
    for (auto& t : out.side_logits) t = crop(t);
    for (auto& t : out.side_probs) t = crop(t);
    out.fused_logits = crop(out.fused_logits);
    out.fused_prob = crop(out.fused_prob);
    return out;
}

template float probability_from_logit(float) noexcept;
template double probability_from_logit(double) noexcept;
template class BasicModel<float>;
template class BasicModel<double>;

}  // namespace scnet
