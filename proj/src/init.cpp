#include "scnet/init.hpp"

#include <cmath>
#include <random>

#include "scnet/checkpoint.hpp"

namespace scnet {
namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

template <typename T>
void glorot(BasicModel<T>& model, std::uint64_t seed) {
    auto& params = model.parameters();
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const ParamInfo& info = params.info(i);
        auto values = params.values(i);
        if (ends_with(info.name, ".upsample.weight")) {
            const int k = info.shape[2];
            const int channels = info.shape[0];
            std::fill(values.begin(), values.end(), T{});
            for (int c = 0; c < channels; ++c)
                for (int y = 0; y < k; ++y)
                    for (int x = 0; x < k; ++x)
                        values[((static_cast<std::size_t>(c) * channels + c) * k + y) * k + x] =
                            static_cast<T>(bilinear_kernel_value(k, y, x));
        } else if (ends_with(info.name, ".weight")) {
            const double bound = glorot_bound(info.shape[1], info.shape[0], info.shape[2]);
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (T& v : values) v = static_cast<T>(dist(rng));
        } else if (ends_with(info.name, ".gamma")) {
            std::fill(values.begin(), values.end(), T{1});
        } else {
            std::fill(values.begin(), values.end(), T{});
        }
    }
}

}  // namespace

double glorot_bound(int in_channels, int out_channels, int kernel) {
    const double area = static_cast<double>(kernel) * kernel;
    return std::sqrt(6.0 / (in_channels * area + out_channels * area));
}

double bilinear_kernel_value(int kernel, int y, int x) {
    if (kernel == 1) return 1.0;
    const double factor = (kernel + 1) / 2;
    const double center = kernel % 2 == 1 ? factor - 1 : factor - 0.5;
    return (1 - std::abs(y - center) / factor) * (1 - std::abs(x - center) / factor);
}

template <typename T>
void init_weights(BasicModel<T>& model, const std::string& scheme, std::uint64_t seed,
                  const std::string& source) {
    if (scheme == "glorot") {
        glorot(model, seed);
        return;
    }
    if (scheme == "pretrained-encoder") {
        if (source.empty()) throw ConfigError("init scheme pretrained-encoder needs a checkpoint path");
        glorot(model, seed);
        const Checkpoint ckpt = load_checkpoint(source);
        const auto& src = ckpt.model.parameters();
        auto& dst = model.parameters();
        std::size_t copied = 0;
        for (std::size_t i = 0; i < dst.size(); ++i) {
            const ParamInfo& info = dst.info(i);
            if (info.name.rfind("encoder.", 0) != 0) continue;
            const auto j = src.find(info.name);
            if (!j) continue;
            if (!(src.info(*j) == info))
                throw ConfigError("pretrained encoder array " + info.name + " has a different shape");
            auto from = src.values(*j);
            auto to = dst.values(i);
            for (std::size_t k = 0; k < to.size(); ++k) to[k] = static_cast<T>(from[k]);
            ++copied;
        }
        if (copied == 0) throw ConfigError("checkpoint " + source + " holds no encoder arrays");
        return;
    }
    throw ConfigError("unknown init scheme: " + scheme);
}

template void init_weights(BasicModel<float>&, const std::string&, std::uint64_t, const std::string&);
template void init_weights(BasicModel<double>&, const std::string&, std::uint64_t, const std::string&);

}  // namespace scnet
