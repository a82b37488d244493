#include "scnet/prior.hpp"

#include <opencv2/dnn.hpp>
#include <opencv2/dnn/layer.details.hpp>
#include <opencv2/imgproc.hpp>

#include "scnet/errors.hpp"
#include "scnet/image_io.hpp"
#include "json_util.hpp"

namespace scnet {

std::string to_string(EdgeMode m) {
    switch (m) {
        case EdgeMode::Precomputed: return "precomputed";
        case EdgeMode::Learned: return "learned";
        case EdgeMode::Classical: return "classical";
    }
    return "?";
}

EdgeMode parse_edge_mode(const std::string& name) {
    if (name == "precomputed") return EdgeMode::Precomputed;
    if (name == "learned") return EdgeMode::Learned;
    if (name == "classical") return EdgeMode::Classical;
    throw ConfigError("prior.mode: unknown edge mode '" + name + "'");
}

void PriorConfig::validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("prior.threshold must lie in (0, 1)");
    if (!(canny_low >= 0.0 && canny_low <= canny_high))
        throw ConfigError("prior.canny_low must satisfy 0 <= canny_low <= canny_high");
    if (mode == EdgeMode::Learned && (edge_model.empty() || edge_weights.empty()))
        throw ConfigError("prior: learned mode needs edge_model and edge_weights");
    if (mode == EdgeMode::Precomputed && edge_dir.empty())
        throw ConfigError("prior: precomputed mode needs edge_dir");
}

void to_json(nlohmann::json& j, const PriorConfig& c) {
    j = {{"mode", to_string(c.mode)},     {"threshold", c.threshold},   {"edge_model", c.edge_model},
         {"edge_weights", c.edge_weights}, {"edge_dir", c.edge_dir},     {"canny_low", c.canny_low},
         {"canny_high", c.canny_high}};
}

void from_json(const nlohmann::json& j, PriorConfig& c) {
    detail::reject_unknown_keys(
        j, "prior", {"mode", "threshold", "edge_model", "edge_weights", "edge_dir", "canny_low", "canny_high"});
    if (j.contains("mode")) c.mode = parse_edge_mode(j.at("mode").get<std::string>());
    detail::read_if(j, "threshold", c.threshold);
    detail::read_if(j, "edge_model", c.edge_model);
    detail::read_if(j, "edge_weights", c.edge_weights);
    detail::read_if(j, "edge_dir", c.edge_dir);
    detail::read_if(j, "canny_low", c.canny_low);
    detail::read_if(j, "canny_high", c.canny_high);
}

namespace {

// Caffe-style crop of the first input to the spatial size of the second,
// centred. The edge network's deploy file uses it to align upsampled side
// outputs with the input.
class CentreCropLayer : public cv::dnn::Layer {
public:
    explicit CentreCropLayer(const cv::dnn::LayerParams& params) : cv::dnn::Layer(params) {}

    static cv::Ptr<cv::dnn::Layer> create(cv::dnn::LayerParams& params) {
        return cv::makePtr<CentreCropLayer>(params);
    }

    bool getMemoryShapes(const std::vector<std::vector<int>>& inputs, int,
                         std::vector<std::vector<int>>& outputs,
                         std::vector<std::vector<int>>&) const override {
        std::vector<int> shape = inputs[0];
        shape[2] = inputs[1][2];
        shape[3] = inputs[1][3];
        outputs.assign(1, shape);
        return false;
    }

    void forward(cv::InputArrayOfArrays inputs_arr, cv::OutputArrayOfArrays outputs_arr,
                 cv::OutputArrayOfArrays) override {
        std::vector<cv::Mat> inputs, outputs;
        inputs_arr.getMatVector(inputs);
        outputs_arr.getMatVector(outputs);
        const cv::Mat& in = inputs[0];
        cv::Mat& out = outputs[0];
        const int y0 = (in.size[2] - out.size[2]) / 2;
        const int x0 = (in.size[3] - out.size[3]) / 2;
        const cv::Range ranges[4] = {cv::Range::all(), cv::Range::all(),
                                     cv::Range(y0, y0 + out.size[2]), cv::Range(x0, x0 + out.size[3])};
        in(ranges).copyTo(out);
    }
};

void register_crop_layer() {
    static const bool done = [] {
        cv::dnn::LayerFactory::registerLayer("Crop", CentreCropLayer::create);
        return true;
    }();
    (void)done;
}

}  // namespace

struct EdgeDetector::Net {
    cv::dnn::Net net;
};

EdgeDetector::EdgeDetector(PriorConfig config) : config_(std::move(config)) {
    config_.validate();
    if (config_.mode != EdgeMode::Learned) return;
    for (const auto& f : {config_.edge_model, config_.edge_weights}) {
        if (!std::filesystem::exists(f)) throw DataError("edge network file not found: " + f);
    }
    register_crop_layer();
    net_ = std::make_unique<Net>();
    try {
        net_->net = cv::dnn::readNetFromCaffe(config_.edge_model, config_.edge_weights);
    } catch (const cv::Exception& e) {
        throw DataError("cannot load edge network: " + std::string(e.what()));
    }
}

EdgeDetector::~EdgeDetector() = default;
EdgeDetector::EdgeDetector(EdgeDetector&&) noexcept = default;
EdgeDetector& EdgeDetector::operator=(EdgeDetector&&) noexcept = default;

cv::Mat classical_edges(const cv::Mat& rgb, double low, double high) {
    if (rgb.empty() || rgb.type() != CV_8UC3) throw DataError("edge detection needs an 8-bit RGB image");
    cv::Mat grey, edges;
    cv::cvtColor(rgb, grey, cv::COLOR_RGB2GRAY);
    cv::Canny(grey, edges, low, high, 3, true);
    return edges / 255;
}

cv::Mat EdgeDetector::detect(const cv::Mat& rgb) {
    switch (config_.mode) {
        case EdgeMode::Classical: return classical_edges(rgb, config_.canny_low, config_.canny_high);
        case EdgeMode::Precomputed:
            throw ConfigError("precomputed edge mode has no detector; edges must come from edge_dir");
        case EdgeMode::Learned: break;
    }
    if (rgb.empty() || rgb.type() != CV_8UC3) throw DataError("edge detection needs an 8-bit RGB image");
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    const cv::Mat blob = cv::dnn::blobFromImage(bgr, 1.0, rgb.size(),
                                                cv::Scalar(104.00698793, 116.66876762, 122.67891434),
                                                false, false);
    net_->net.setInput(blob);
    cv::Mat out = net_->net.forward();
    cv::Mat prob(rgb.rows, rgb.cols, CV_32F, out.ptr<float>(0, 0));
    cv::Mat bits;
    cv::threshold(prob, bits, config_.threshold, 1.0, cv::THRESH_BINARY);
    bits.convertTo(bits, CV_8U);
    return bits;
}

std::filesystem::path edge_path_for(const std::filesystem::path& edge_dir, const std::string& sample_id) {
    return edge_dir / (sample_id + ".edge.png");
}

cv::Mat load_precomputed_edges(const std::filesystem::path& edge_dir, const std::string& sample_id) {
    const auto path = edge_path_for(edge_dir, sample_id);
    if (!std::filesystem::exists(path)) throw DataError("missing precomputed edge map " + path.string());
    return read_binary(path);
}

FeatureMap assemble_input(const cv::Mat& rgb, const cv::Mat& edges, int channels) {
    if (channels != 3 && channels != 4) throw ShapeError("assemble_input: channels must be 3 or 4");
    if (rgb.empty() || rgb.type() != CV_8UC3) throw ShapeError("assemble_input: expected an 8-bit RGB image");
    if (channels == 4) {
        if (edges.empty()) throw ShapeError("assemble_input: 4-channel input needs an edge map");
        if (edges.size() != rgb.size() || edges.type() != CV_8UC1)
            throw ShapeError("assemble_input: edge map " + std::to_string(edges.rows) + "x" +
                             std::to_string(edges.cols) + " does not match image " +
                             std::to_string(rgb.rows) + "x" + std::to_string(rgb.cols));
    }
    FeatureMap out(channels, rgb.rows, rgb.cols);
    for (int y = 0; y < rgb.rows; ++y) {
        const auto* row = rgb.ptr<cv::Vec3b>(y);
        for (int x = 0; x < rgb.cols; ++x) {
            for (int c = 0; c < 3; ++c) out(c, y, x) = normalize_pixel(static_cast<float>(row[x][c]));
        }
        if (channels == 4) {
            const auto* e = edges.ptr<std::uint8_t>(y);
            for (int x = 0; x < rgb.cols; ++x) out(3, y, x) = e[x] ? 1.0f : -1.0f;
        }
    }
    return out;
}

cv::Mat rgb_from_input(const FeatureMap& input) {
    if (input.channels() < 3) throw ShapeError("rgb_from_input: need at least 3 channels");
    cv::Mat rgb(input.height(), input.width(), CV_8UC3);
    for (int y = 0; y < input.height(); ++y) {
        auto* row = rgb.ptr<cv::Vec3b>(y);
        for (int x = 0; x < input.width(); ++x) {
            for (int c = 0; c < 3; ++c)
                row[x][c] = cv::saturate_cast<std::uint8_t>((input(c, y, x) + 1.0f) * 127.5f);
        }
    }
    return rgb;
}

Mask mask_from_mat(const cv::Mat& bits) {
    if (bits.type() != CV_8UC1) throw ShapeError("mask_from_mat: expected a single-channel 8-bit map");
    Mask m(1, bits.rows, bits.cols);
    for (int y = 0; y < bits.rows; ++y) {
        const auto* row = bits.ptr<std::uint8_t>(y);
        for (int x = 0; x < bits.cols; ++x) m(0, y, x) = row[x] ? 1 : 0;
    }
    return m;
}

}  // namespace scnet
