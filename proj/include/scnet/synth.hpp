#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "scnet/datapipe.hpp"

namespace scnet {

enum class SynthStyle { Pavement, Concrete };

std::string to_string(SynthStyle s);
/// "pavement" or "concrete".
SynthStyle parse_synth_style(const std::string& name);

struct SynthConfig {
    int count = 8;
    int size = 256;
    SynthStyle style = SynthStyle::Pavement;
    std::uint64_t seed = 0;
    /// Target crack-pixel fraction per image.
    double foreground_rate = 0.055;
    int min_width = 2;
    int max_width = 6;

    /// Throws ConfigError.
    void validate() const;
};

/// Image `index` of the corpus: dark random-walk polylines on a textured
/// background, with the exact drawn mask. Crack pixels are added one segment
/// at a time until the mask reaches the target rate. Depends only on
/// (config, index).
Sample synth_sample(const SynthConfig& config, int index);

/// Writes images/<id>.png, masks/<id>.png and manifest.json under `root`
/// and returns the manifest. Ids are "<style>-NNNN".
Manifest write_synth_corpus(const std::filesystem::path& root, const SynthConfig& config);

}  // namespace scnet
