#pragma once

#include <cstdint>
#include <vector>

#include "scnet/layers.hpp"
#include "scnet/model_config.hpp"
#include "scnet/params.hpp"
#include "scnet/tensor.hpp"

namespace scnet {

/// Encoder side of the network after one input has passed through it.
/// Index s = 0 is the shallowest scale.
template <typename T>
struct EncoderState {
    /// Trunk after pooling (and attention gating) at each scale: H / 2^(s+1).
    std::vector<Tensor<T>> trunk;
    /// Argmax grids of each 2x2 pooling, same shape as trunk[s].
    std::vector<Tensor<std::int32_t>> pool_indices;
    /// Block output shape before pooling (the unpooling target).
    std::vector<Shape> pre_pool_shapes;
    /// C'-channel side maps feeding the enhancement path (F_r, or a 1x1
    /// projection when attention is disabled).
    std::vector<Tensor<T>> side;
};

template <typename T>
struct ForwardOutput {
    /// f_ed^i, i = 1..S stored at [i-1]; single channel, input resolution.
    std::vector<Tensor<T>> side_logits;
    /// P^i = sigmoid(f_ed^i).
    std::vector<Tensor<T>> side_probs;
    Tensor<T> fused_logits;
    Tensor<T> fused_prob;
    /// f_e^i from the enhancement encoder ([0] shallowest, H/2 for input H).
    std::vector<Tensor<T>> enhancement_maps;
    /// f_d^j from decoder stage j ([0] deepest stage, H / 2^(S-1)).
    std::vector<Tensor<T>> decoder_maps;
};

/// dL/d(logits) for every supervised output.
template <typename T>
struct OutputGradients {
    std::vector<Tensor<T>> side_logits;
    Tensor<T> fused_logits;
};

template <typename T>
struct ForwardTrace;

/// The crack segmentation network. Fused stage k (1-based, shallow to deep)
/// concatenates the upsampled enhancement map f_e^k, the decoder map of the
/// same resolution, and the outputs of all earlier stages resized to that
/// resolution, so stage k sees k + 1 channels (2..6 for five scales). A 1x1
/// convolution reduces them to one channel and a learned transposed
/// convolution restores the input resolution, giving f_ed^(S+1-k).
template <typename T>
class BasicModel {
public:
    explicit BasicModel(ModelConfig config);

    [[nodiscard]] const ModelConfig& config() const noexcept { return config_; }
    [[nodiscard]] ParameterSet<T>& parameters() noexcept { return params_; }
    [[nodiscard]] const ParameterSet<T>& parameters() const noexcept { return params_; }
    [[nodiscard]] std::size_t parameter_count() const noexcept { return params_.total_count(); }

    /// Inference. Pure function of (parameters, input); safe to call concurrently.
    [[nodiscard]] ForwardOutput<T> forward(const Tensor<T>& input) const;
    /// Training forward pass; records what backward() needs.
    ForwardOutput<T> forward(const Tensor<T>& input, ForwardTrace<T>& trace) const;
    /// Accumulates parameter gradients into `grads` (same layout as parameters()).
    void backward(const ForwardTrace<T>& trace, const OutputGradients<T>& output_grads,
                  ParameterSet<T>& grads) const;

    [[nodiscard]] EncoderState<T> encoder_forward(const Tensor<T>& input) const;
    [[nodiscard]] std::vector<Tensor<T>> enhancement_forward(const EncoderState<T>& state) const;
    [[nodiscard]] std::vector<Tensor<T>> decoder_forward(const EncoderState<T>& state) const;

    /// Channel count fed to fused stage k (1-based).
    [[nodiscard]] int fused_stage_in_channels(int stage) const;
    [[nodiscard]] int final_fusion_in_channels() const { return config_.num_scales; }

    /// Throws ShapeError unless the input fits the network.
    void check_input(const Shape& s) const;

private:
    struct EncoderBlock {
        std::vector<ConvUnit<T>> units;
        std::optional<Attention<T>> attention;
        std::optional<Conv2d<T>> side_projection;
    };
    struct DecoderBlock {
        std::vector<ConvUnit<T>> units;
        std::optional<Attention<T>> attention;
        std::optional<Conv2d<T>> side_projection;
        std::optional<Conv2d<T>> to_single_channel;
    };
    struct FusedStage {
        Conv2d<T> conv;
        ConvTranspose2d<T> upsample;
    };

    ForwardOutput<T> run(const Tensor<T>& input, ForwardTrace<T>* trace) const;
    EncoderState<T> run_encoder(const Tensor<T>& input, ForwardTrace<T>* trace) const;
    std::vector<Tensor<T>> run_enhancement(const EncoderState<T>& state,
                                           ForwardTrace<T>* trace) const;
    std::vector<Tensor<T>> run_decoder(const EncoderState<T>& state, ForwardTrace<T>* trace) const;

    ModelConfig config_;
    ParameterSet<T> params_;
    std::vector<EncoderBlock> encoder_;
    std::vector<Conv2d<T>> enhancement_;
    std::vector<DecoderBlock> decoder_;
    std::vector<FusedStage> fused_;
    Conv2d<T> final_fusion_;
};

/// Everything backward() needs from one training forward pass.
template <typename T>
struct ForwardTrace {
    struct EncoderBlockTrace {
        std::vector<UnitTrace<T>> units;
        Shape pre_pool;
        Tensor<std::int32_t> indices;
        std::optional<AttentionTrace<T>> attention;
        Tensor<T> pooled;
    };
    struct DecoderBlockTrace {
        std::vector<UnitTrace<T>> units;
        std::optional<AttentionTrace<T>> attention;
        Tensor<T> block_output;
        Tensor<T> side;
    };
    struct FusedStageTrace {
        Tensor<T> concat;
        Tensor<T> reduced;
        Shape enhancement_shape;
    };

    Shape input_shape;
    std::vector<EncoderBlockTrace> encoder;
    std::vector<Tensor<T>> enhancement_sums;
    std::vector<DecoderBlockTrace> decoder;
    std::vector<FusedStageTrace> fused;
    Tensor<T> final_concat;
};

using Model = BasicModel<float>;

/// Centre-pads (replicating the border) to the next multiple of the network's
/// size multiple, runs inference, and crops every output back.
ForwardOutput<float> predict_padded(const Model& model, const FeatureMap& input);

/// sigmoid clamped into the open interval (0, 1) at float resolution.
template <typename T>
T probability_from_logit(T logit) noexcept;

}  // namespace scnet
