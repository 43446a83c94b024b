#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bbs/layer.hpp"

namespace bbs::cli {

// Workload manifest (JSON):
//
//   {"model": "name",
//    "layers": [{"name": "conv1", "kind": "conv", "channels": 64,
//                "dims": {"cout": 64, "cin": 3, "kh": 3, "kw": 3, "out_h": 56, "out_w": 56},
//                "weights": "conv1.w.bin", "scales": "conv1.s.bin"}]}
//
// GEMM dims are {"m", "k", "n"}. Weights are raw int8, channel-major; scales
// are little-endian float32, one per channel, and may be omitted. Relative
// paths resolve against the manifest's directory.

struct ManifestLayer {
    std::string name;
    LayerKind kind = LayerKind::Gemm;
    LayerDims dims;
    std::size_t channels = 0;
    std::string weights;
    std::string scales;
};

struct Manifest {
    std::string model;
    std::vector<ManifestLayer> layers;
};

Manifest parse_manifest(const std::string& text);
std::string manifest_to_json(const Manifest& m);

struct Workload {
    std::string model;
    std::vector<QuantizedLayer> layers;
};

/// Reads the manifest and every blob it names. Size mismatches between the
/// blobs and the declared dims are FormatErrors naming the file.
Workload load_workload(const std::filesystem::path& manifest_path);

/// Writes blobs for every layer next to the manifest, then the manifest.
void save_workload(const std::filesystem::path& manifest_path, const Workload& workload);

}  // namespace bbs::cli
