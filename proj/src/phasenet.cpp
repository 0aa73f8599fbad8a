#include "cardio/phasenet.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

#include "cardio/weights_io.hpp"

namespace cardio::phasenet {

namespace {

std::vector<int> default_channels(int resolution) {
    // As many conv+pool blocks as the resolution allows (final side >= 2),
    // capped at five: 8,16,32,64,64.
    const std::vector<int> full = {8, 16, 32, 64, 64};
    int blocks = 0;
    int side = resolution;
    while (blocks < 5 && side >= 4) {
        side /= 2;
        ++blocks;
    }
    if (blocks < 1) throw ConfigError("resolution too small for the spatial CNN");
    return {full.begin(), full.begin() + blocks};
}

} // namespace

std::string PhaseNetConfig::describe() const {
    std::ostringstream os;
    os << "resolution=" << resolution << ";channels=";
    for (int c : spatial_channels) os << c << ",";
    os << ";feature_dim=" << feature_dim << ";window=" << window << ";out=" << out_frames
       << ";temporal_kernel=" << temporal_kernel << ";hidden=" << classifier_hidden
       << ";dropout=" << dropout_rate;
    return os.str();
}

PhaseNet::PhaseNet(PhaseNetConfig config) : config_(std::move(config)) {
    if (config_.spatial_channels.empty())
        config_.spatial_channels = default_channels(config_.resolution);

    std::vector<LayerSpec> spatial;
    int in_ch = 1;
    int side = config_.resolution;
    for (int ch : config_.spatial_channels) {
        spatial.push_back(Conv2DSpec{in_ch, ch, 3, 1, ops::Padding::same});
        spatial.push_back(ReLUSpec{});
        spatial.push_back(MaxPool2DSpec{2, 2});
        in_ch = ch;
        side /= 2;
    }
    if (side < 1) throw ConfigError("spatial CNN pools below 1x1; reduce block count");
    spatial.push_back(DenseSpec{in_ch * side * side, config_.feature_dim});
    spatial.push_back(ReLUSpec{});
    spatial_ = Net("spatial", std::move(spatial));

    const int temporal_out = config_.window - config_.temporal_kernel + 1;
    std::vector<LayerSpec> head;
    head.push_back(DepthwiseConv1DSpec{config_.feature_dim, config_.temporal_kernel});
    head.push_back(DenseSpec{temporal_out * config_.feature_dim, config_.classifier_hidden});
    head.push_back(ReLUSpec{});
    head.push_back(DropoutSpec{config_.dropout_rate});
    head.push_back(DenseSpec{config_.classifier_hidden, config_.out_frames});
    head.push_back(SigmoidSpec{});
    head_ = Net("head", std::move(head));
}

ParamStore PhaseNet::init_params(std::uint64_t seed) const {
    ParamStore store;
    Rng spatial_rng(derive_seed(seed, 1));
    spatial_.init_params(store, spatial_rng);
    Rng head_rng(derive_seed(seed, 2));
    ParamStore head_store;
    head_.init_params(head_store, head_rng);
    store.absorb(std::move(head_store));
    return store;
}

Tensor PhaseNet::frame_features(const ParamStore& params, const Tensor& frame, Mode mode,
                                Tape* tape) const {
    require_shape(frame, {1, config_.resolution, config_.resolution}, "phase-net input frame");
    return spatial_.forward(params, frame, mode, nullptr, tape);
}

Tensor PhaseNet::predict_window(const ParamStore& params, const Tensor& features, Mode mode,
                                Rng* dropout_rng, Tape* tape) const {
    require_shape(features, {config_.window, config_.feature_dim}, "phase-net window features");
    return head_.forward(params, features, mode, dropout_rng, tape);
}

std::string PhaseNet::config_hash() const { return cardio::config_hash(config_.describe()); }

FeatureStack spatial_features(const PhaseNet& net, const ParamStore& params,
                              const std::vector<Tensor>& frames, int threads) {
    const int m = static_cast<int>(frames.size());
    const int dim = net.config().feature_dim;
    FeatureStack stack;
    stack.features = Tensor({std::max(m, 1), dim});
    if (m == 0) return stack;

    std::atomic<long> calls{0};
    auto worker = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            Tensor f = net.frame_features(params, frames[static_cast<std::size_t>(i)], Mode::infer);
            calls.fetch_add(1, std::memory_order_relaxed);
            std::copy(f.data.begin(), f.data.end(),
                      stack.features.data.begin() + static_cast<std::size_t>(i) * dim);
        }
    };
    threads = std::clamp(threads, 1, m);
    if (threads == 1) {
        worker(0, m);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (m + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int begin = t * chunk;
            const int end = std::min(m, begin + chunk);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    stack.invocations = calls.load();
    return stack;
}

namespace {

Tensor window_slice(const Tensor& features, int start, int window) {
    const int dim = features.shape[1];
    Tensor out({window, dim});
    std::copy(features.data.begin() + static_cast<std::size_t>(start) * dim,
              features.data.begin() + static_cast<std::size_t>(start + window) * dim,
              out.data.begin());
    return out;
}

} // namespace

std::vector<std::vector<double>> sliding_window_predict(const PhaseNet& net,
                                                        const ParamStore& params,
                                                        const Tensor& features) {
    const int m = features.shape[0];
    const int window = net.config().window;
    if (m < window)
        throw SequenceTooShort("sliding window needs >= " + std::to_string(window) +
                               " frames, got " + std::to_string(m));
    std::vector<std::vector<double>> candidates(static_cast<std::size_t>(m));
    const int offset = (window - net.config().out_frames) / 2; // middle 4 of 10: positions 3-6
    for (int w = 0; w + window <= m; ++w) {
        Tensor probs = net.predict_window(params, window_slice(features, w, window), Mode::infer);
        for (int j = 0; j < net.config().out_frames; ++j)
            candidates[static_cast<std::size_t>(w + offset + j)].push_back(probs.data[j]);
    }
    return candidates;
}

std::vector<std::optional<double>> aggregate(const std::vector<std::vector<double>>& candidates) {
    std::vector<std::optional<double>> selected(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& cand = candidates[i];
        if (cand.size() < 2) continue;
        double best = cand[0];
        for (double p : cand)
            if (std::abs(p - 0.5) > std::abs(best - 0.5)) best = p; // earliest wins ties
        selected[i] = best;
    }
    return selected;
}

std::vector<double> upsample_probs(const std::vector<std::pair<int, double>>& knots,
                                   int first_frame, int last_frame) {
    if (knots.size() < 2)
        throw SequenceTooShort("upsampling needs at least 2 selected probabilities");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(last_frame - first_frame + 1));
    std::size_t seg = 0;
    for (int f = first_frame; f <= last_frame; ++f) {
        if (f <= knots.front().first) {
            out.push_back(knots.front().second);
            continue;
        }
        if (f >= knots.back().first) {
            out.push_back(knots.back().second);
            continue;
        }
        while (knots[seg + 1].first < f) ++seg;
        const auto& [x0, y0] = knots[seg];
        const auto& [x1, y1] = knots[seg + 1];
        const double u = static_cast<double>(f - x0) / static_cast<double>(x1 - x0);
        out.push_back(y0 + u * (y1 - y0));
    }
    return out;
}

std::vector<int> schmitt_filter(const std::vector<double>& probs, double hi, double lo) {
    if (!(0.0 <= lo && lo < hi && hi <= 1.0))
        throw ConfigError("schmitt thresholds must satisfy 0 <= lo < hi <= 1");
    std::vector<int> labels;
    labels.reserve(probs.size());
    int state = !probs.empty() && probs.front() >= 0.5 ? 1 : 0;
    for (double p : probs) {
        if (p >= hi) state = 1;
        else if (p <= lo) state = 0;
        labels.push_back(state);
    }
    return labels;
}

double phase_loss(double p, double y) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("phase_loss: p must be in (0,1)");
    if (!(y >= 0.0 && y <= 1.0)) throw DomainError("phase_loss: y must be in [0,1]");
    const double bce = -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    const bool hard = y == 0.0 || y == 1.0;
    const bool correct = hard && ((y == 1.0 && p > 0.5) || (y == 0.0 && p < 0.5));
    return correct ? 0.25 * bce : bce;
}

double phase_loss_grad(double p, double y) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("phase_loss_grad: p must be in (0,1)");
    const double dbce = (p - y) / (p * (1.0 - p));
    const bool hard = y == 0.0 || y == 1.0;
    const bool correct = hard && ((y == 1.0 && p > 0.5) || (y == 0.0 && p < 0.5));
    return correct ? 0.25 * dbce : dbce;
}

Tensor augment_frame(const Tensor& frame, bool hflip, double angle_deg, double intensity_scale) {
    const int h = frame.shape[1], w = frame.shape[2];
    const double theta = angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;

    Tensor out(frame.shape);
    auto sample = [&](double x, double y) {
        x = std::clamp(x, 0.0, static_cast<double>(w - 1));
        y = std::clamp(y, 0.0, static_cast<double>(h - 1));
        const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
        const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
        const double fx = x - x0, fy = y - y0;
        const auto at = [&](int yy, int xx) {
            return frame.data[static_cast<std::size_t>(yy) * w + xx];
        };
        return (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x1)) +
               fy * ((1 - fx) * at(y1, x0) + fx * at(y1, x1));
    };

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double xs = hflip ? (w - 1 - x) : x;
            const double dx = xs - cx, dy = y - cy;
            const double src_x = cx + c * dx - s * dy;
            const double src_y = cy + s * dx + c * dy;
            out.data[static_cast<std::size_t>(y) * w + x] =
                sample(src_x, src_y) * intensity_scale;
        }
    }
    return out;
}

PhaseTrainResult train_phasenet(const PhaseNet& net,
                                const std::vector<PhaseTrainSequence>& sequences,
                                const PhaseTrainConfig& config) {
    if (sequences.empty()) throw EmptyDataset("train_phasenet: no training sequences");
    for (const auto& seq : sequences)
        if (seq.frames.size() != seq.labels.size())
            throw ShapeError("train_phasenet: frames/labels length mismatch");

    const int window = net.config().window;
    const int dim = net.config().feature_dim;

    PhaseTrainResult result;
    result.params = net.init_params(derive_seed(config.seed, 0xa1));
    AdamState adam = make_adam_state(result.params, config.adam);
    Rng dropout_rng(derive_seed(config.seed, 0xd0));

    std::vector<std::size_t> order(sequences.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(),
                     Rng(derive_seed(config.seed, 0x200 + epoch)).engine());
        Rng aug_rng(derive_seed(config.seed, 0x300 + epoch));
        double epoch_loss = 0.0;
        long epoch_windows = 0;

        for (std::size_t sidx : order) {
            const auto& seq = sequences[sidx];
            const int m = static_cast<int>(seq.frames.size());
            const int n_windows = m - window + 1;

            bool hflip = false;
            double angle = 0.0, gain = 1.0;
            if (config.augment) {
                hflip = aug_rng.bernoulli(0.5);
                angle = aug_rng.uniform(-config.max_rotation_deg, config.max_rotation_deg);
                gain = 1.0 + aug_rng.uniform(-config.max_intensity_shift,
                                             config.max_intensity_shift);
            }
            if (n_windows < 1) continue;

            // spatial features once per frame, tape kept for the backward pass
            std::vector<Tape> frame_tapes(static_cast<std::size_t>(m));
            Tensor features({m, dim});
            for (int f = 0; f < m; ++f) {
                Tensor frame = config.augment
                                   ? augment_frame(seq.frames[static_cast<std::size_t>(f)], hflip,
                                                   angle, gain)
                                   : seq.frames[static_cast<std::size_t>(f)];
                Tensor feat = net.spatial().forward(result.params, frame, Mode::train, nullptr,
                                                    &frame_tapes[static_cast<std::size_t>(f)]);
                std::copy(feat.data.begin(), feat.data.end(),
                          features.data.begin() + static_cast<std::size_t>(f) * dim);
            }

            // head forward/backward per window; feature gradients accumulate per frame
            Tensor feature_grads({m, dim});
            const double norm = 1.0 / (4.0 * n_windows);
            for (int w = 0; w < n_windows; ++w) {
                Tape head_tape;
                Tensor win = window_slice(features, w, window);
                Tensor probs = net.head().forward(result.params, win, Mode::train, &dropout_rng,
                                                  &head_tape);
                Tensor gout({net.config().out_frames});
                for (int j = 0; j < net.config().out_frames; ++j) {
                    const double y = seq.labels[static_cast<std::size_t>(w + 3 + j)];
                    epoch_loss += phase_loss(probs.data[j], y) * norm;
                    gout.data[j] = phase_loss_grad(probs.data[j], y) * norm;
                }
                Tensor gfeat =
                    net.head().backward(head_tape, gout, result.params, result.params);
                for (int t = 0; t < window; ++t) {
                    double* dst =
                        feature_grads.data.data() + static_cast<std::size_t>(w + t) * dim;
                    const double* src = gfeat.data.data() + static_cast<std::size_t>(t) * dim;
                    for (int d = 0; d < dim; ++d) dst[d] += src[d];
                }
                ++epoch_windows;
            }

            // spatial backward once per frame with its accumulated gradient
            for (int f = 0; f < m; ++f) {
                Tensor g({dim});
                std::copy(feature_grads.data.begin() + static_cast<std::size_t>(f) * dim,
                          feature_grads.data.begin() + static_cast<std::size_t>(f + 1) * dim,
                          g.data.begin());
                net.spatial().backward(frame_tapes[static_cast<std::size_t>(f)], g, result.params,
                                       result.params);
            }
            adam_step(result.params, adam);
        }

        epoch_loss /= std::max(1L, static_cast<long>(sequences.size()));
        result.epoch_loss.push_back(epoch_loss);
        if (config.verbose)
            std::cerr << "[train-phase] epoch " << epoch + 1 << "/" << config.epochs << " loss "
                      << epoch_loss << " (" << epoch_windows << " windows)\n";
    }
    return result;
}

} // namespace cardio::phasenet
