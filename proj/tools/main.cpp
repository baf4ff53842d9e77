// vitmm command-line front end: encode/pack/forward demos over the toy
// models, invariant selftests, eval scoring, judged-benchmark runs, and
// weight-container tooling.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vitmm/assembly.hpp"
#include "vitmm/config.hpp"
#include "vitmm/encoder.hpp"
#include "vitmm/errors.hpp"
#include "vitmm/eval.hpp"
#include "vitmm/image.hpp"
#include "vitmm/judge.hpp"
#include "vitmm/selftest.hpp"
#include "vitmm/weights.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRemote = 3;

vitmm::RunConfig load_config_or_default(const std::string &path) {
    if (path.empty()) {
        vitmm::RunConfig cfg;
        cfg.validate();
        return cfg;
    }
    return vitmm::RunConfig::load(path);
}

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw vitmm::DataError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw vitmm::DataError("cannot write file: " + path);
    out << text;
}

int cmd_encode(const std::string &image_path, int max_edge_override,
               const std::string &config_path) {
    vitmm::RunConfig cfg = load_config_or_default(config_path);
    if (max_edge_override > 0) cfg.max_edge = max_edge_override;
    const vitmm::Image img = vitmm::load_image(image_path);
    const auto target = vitmm::fit_resolution(img.height, img.width, cfg.max_edge,
                                              int(cfg.encoder.patch_size));
    const int hp = target.height / int(cfg.encoder.patch_size);
    const int wp = target.width / int(cfg.encoder.patch_size);
    const auto layout = vitmm::build_token_layout(hp, wp);
    std::cout << "image " << img.width << "x" << img.height << " -> fit " << target.width
              << "x" << target.height << "\n";
    std::cout << "patches " << hp << "x" << wp << ", tokens(assembled) " << layout.kinds.size()
              << "\n";
    return kExitOk;
}

int cmd_pack(const std::vector<std::string> &image_paths, const std::string &config_path) {
    vitmm::RunConfig cfg = load_config_or_default(config_path);
    std::vector<vitmm::PatchGrid> grids;
    for (const auto &path : image_paths)
        grids.push_back(vitmm::preprocess(vitmm::load_image(path), cfg.max_edge,
                                          int(cfg.encoder.patch_size), cfg.normalization));
    const vitmm::Weights w =
        vitmm::init_weights(vitmm::encoder_weight_specs(cfg.encoder), cfg.seed);
    const vitmm::PackedBatch batch = vitmm::pack_batch(grids, w, cfg.encoder);
    std::size_t true_entries = 0;
    for (auto m : batch.mask) true_entries += m;
    std::cout << "packed " << batch.size() << " tokens from " << grids.size() << " images\n";
    for (std::size_t i = 0; i < batch.image_spans.size(); ++i)
        std::cout << "  span " << i << ": start " << batch.image_spans[i].start << ", len "
                  << batch.image_spans[i].len << "\n";
    std::cout << "mask " << batch.size() << "x" << batch.size() << ", " << true_entries
              << " attendable pairs\n";
    return kExitOk;
}

int cmd_forward(const std::vector<std::string> &image_paths, const std::string &text,
                const std::string &config_path, const std::string &weights_path) {
    vitmm::RunConfig cfg = load_config_or_default(config_path);
    vitmm::Weights w;
    if (!weights_path.empty()) {
        w = vitmm::load_weights(weights_path);
    } else {
        auto specs = vitmm::encoder_weight_specs(cfg.encoder);
        for (auto &s : vitmm::decoder_weight_specs(cfg.decoder)) specs.push_back(std::move(s));
        for (auto &s : vitmm::projector_weight_specs(cfg.projector()))
            specs.push_back(std::move(s));
        w = vitmm::init_weights(specs, cfg.seed);
    }

    std::vector<vitmm::ProjectedImage> projected;
    std::vector<vitmm::SequenceItem> order;
    for (const auto &path : image_paths) {
        const vitmm::PatchGrid grid =
            vitmm::preprocess(vitmm::load_image(path), cfg.max_edge,
                              int(cfg.encoder.patch_size), cfg.normalization);
        const vitmm::PackedBatch batch = vitmm::pack_batch({grid}, w, cfg.encoder);
        const vitmm::TensorF enc = vitmm::encoder_forward(batch, w, cfg.encoder, cfg.rope_base);
        vitmm::ProjectedImage pi;
        pi.features = vitmm::project(enc, w, cfg.projector());
        pi.grid_rows = grid.rows;
        pi.grid_cols = grid.cols;
        order.push_back({vitmm::SequenceItem::Kind::Image, {}, projected.size()});
        projected.push_back(std::move(pi));
    }
    if (!text.empty())
        order.push_back({vitmm::SequenceItem::Kind::Text, vitmm::tokenize_bytes(text), 0});
    if (order.empty()) throw vitmm::DataError("forward needs at least one image or --text");

    const vitmm::MultimodalSequence seq = vitmm::assemble(order, projected, w, cfg.decoder);
    const vitmm::TensorF logits = vitmm::decoder_forward(seq, w, cfg.decoder, cfg.rope_base);

    const std::size_t last = logits.rows() - 1;
    float mn = logits.at(last, 0), mx = logits.at(last, 0);
    double mean = 0;
    for (std::size_t j = 0; j < logits.cols(); ++j) {
        mn = std::min(mn, logits.at(last, j));
        mx = std::max(mx, logits.at(last, j));
        mean += logits.at(last, j);
    }
    mean /= double(logits.cols());
    const std::size_t next = vitmm::greedy_next_token(logits);
    std::cout << "sequence length " << seq.size() << ", logits " << logits.rows() << "x"
              << logits.cols() << "\n";
    std::cout << "last-position logits: min " << mn << ", mean " << mean << ", max " << mx
              << "\n";
    std::cout << "greedy next token: " << next;
    if (next < 256 && std::isprint(int(next))) std::cout << " ('" << char(next) << "')";
    else if (next == vitmm::kTokenBreak) std::cout << " (BREAK)";
    else if (next == vitmm::kTokenEnd) std::cout << " (END)";
    std::cout << "\n";
    return kExitOk;
}

int cmd_selftest() {
    const auto results = vitmm::run_selftest_suites();
    bool ok = true;
    for (const auto &r : results) {
        std::cout << (r.passed ? "[pass] " : "[FAIL] ") << r.name;
        if (!r.passed && !r.detail.empty()) std::cout << ": " << r.detail;
        std::cout << "\n";
        ok = ok && r.passed;
    }
    return ok ? kExitOk : kExitData;
}

int cmd_eval_parse(const std::string &in_path, const std::string &metric_name,
                   const std::string &levels_csv, const std::string &json_out) {
    std::vector<vitmm::ParsingLevel> levels;
    std::stringstream ss(levels_csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) levels.push_back(vitmm::parse_level_name(item));
    if (levels.empty()) throw vitmm::ConfigError("no parsing levels requested");

    const vitmm::EvalReport report = vitmm::evaluate_records(
        read_file(in_path), vitmm::parse_metric_name(metric_name), levels);
    std::cout << vitmm::report_to_table(report);
    if (!json_out.empty()) write_file(json_out, vitmm::report_to_json(report));
    return kExitOk;
}

int cmd_eval_judge(const std::string &data_path, const std::string &candidate_url,
                   const std::string &judge_url, std::size_t concurrency,
                   const std::string &candidate_model, const std::string &judge_model,
                   const std::string &json_out) {
    const auto dataset = vitmm::load_conversations(data_path);
    const char *key = std::getenv("EVAL_API_KEY");
    vitmm::EndpointConfig cand{candidate_url, candidate_model, key ? key : ""};
    vitmm::EndpointConfig judge{judge_url, judge_model, key ? key : ""};
    vitmm::RunOptions opts;
    opts.concurrency = concurrency;

    const vitmm::BenchmarkReport report = vitmm::run_benchmark(dataset, cand, judge, opts);
    std::cout << vitmm::benchmark_report_to_table(report);
    if (!json_out.empty()) write_file(json_out, vitmm::benchmark_report_to_json(report));
    if (report.judged_turns == 0 && report.error_count > 0) {
        std::cerr << "all turns failed; first error: " << report.results.front().error << "\n";
        return kExitRemote;
    }
    return kExitOk;
}

int cmd_weights_init(const std::string &config_path, unsigned long seed,
                     const std::string &out_path) {
    vitmm::RunConfig cfg = load_config_or_default(config_path);
    auto specs = vitmm::encoder_weight_specs(cfg.encoder);
    for (auto &s : vitmm::decoder_weight_specs(cfg.decoder)) specs.push_back(std::move(s));
    for (auto &s : vitmm::projector_weight_specs(cfg.projector())) specs.push_back(std::move(s));
    const vitmm::Weights w = vitmm::init_weights(specs, seed);
    vitmm::save_weights(w, out_path);
    std::size_t params = 0;
    for (const auto &[name, t] : w.tensors) params += t.numel();
    std::cout << "wrote " << w.tensors.size() << " tensors (" << params << " parameters) to "
              << out_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"native-resolution ViT toolkit: packed encoding, multimodal assembly, "
                 "standardized evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--model-config", config_path, "JSON run config (numerics live here)");

    // encode
    auto *encode = app.add_subcommand("encode", "fit an image and report its token layout");
    std::string encode_image;
    int max_edge = 0;
    encode->add_option("image", encode_image, "PNG or PPM file")->required();
    encode->add_option("--max-edge", max_edge, "longest-side pixel budget override");

    // pack
    auto *pack = app.add_subcommand("pack", "pack images and report spans and mask stats");
    std::vector<std::string> pack_images;
    pack->add_option("images", pack_images, "PNG or PPM files")->required();

    // forward
    auto *forward = app.add_subcommand(
        "forward", "encoder -> projector -> assembly -> decoder, greedy next token");
    std::vector<std::string> forward_images;
    std::string forward_text;
    std::string weights_path;
    forward->add_option("images", forward_images, "PNG or PPM files");
    forward->add_option("--text", forward_text, "text appended after the images");
    forward->add_option("--weights", weights_path, "NTC1 weights file (default: seeded init)");

    // selftest
    app.add_subcommand("selftest", "run the invariant suites");

    // eval parse / eval judge
    auto *eval = app.add_subcommand("eval", "scoring and judged benchmarks");
    eval->require_subcommand(1);
    auto *eval_parse = eval->add_subcommand("parse", "score a JSONL prediction file");
    std::string eval_in, eval_metric = "exact", eval_levels = "baseline,l1,l2,l3";
    std::string eval_json_out;
    eval_parse->add_option("--in", eval_in, "JSONL prediction records")->required();
    eval_parse->add_option("--metric", eval_metric, "exact|anls|vqa");
    eval_parse->add_option("--levels", eval_levels, "comma-separated parsing levels");
    eval_parse->add_option("--json-out", eval_json_out, "write the JSON report here");

    auto *eval_judge = eval->add_subcommand("judge", "run a judged benchmark over endpoints");
    std::string judge_data, candidate_url, judge_url, judge_json_out;
    std::string candidate_model = "candidate", judge_model = "judge";
    std::size_t concurrency = 4;
    eval_judge->add_option("--data", judge_data, "conversation dataset JSON")->required();
    eval_judge->add_option("--candidate-url", candidate_url, "candidate endpoint base URL")
        ->required();
    eval_judge->add_option("--judge-url", judge_url, "judge endpoint base URL")->required();
    eval_judge->add_option("--concurrency", concurrency, "max in-flight requests");
    eval_judge->add_option("--candidate-model", candidate_model, "candidate model name");
    eval_judge->add_option("--judge-model", judge_model, "judge model name");
    eval_judge->add_option("--json-out", judge_json_out, "write the JSON report here");

    // weights init
    auto *weights = app.add_subcommand("weights", "weight container tooling");
    weights->require_subcommand(1);
    auto *weights_init = weights->add_subcommand("init", "write seeded-init weights");
    std::string weights_out;
    unsigned long seed = 0;
    weights_init->add_option("--config", config_path, "JSON run config");
    weights_init->add_option("--seed", seed, "RNG seed");
    weights_init->add_option("--out", weights_out, "output NTC1 path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (encode->parsed()) return cmd_encode(encode_image, max_edge, config_path);
        if (pack->parsed()) return cmd_pack(pack_images, config_path);
        if (forward->parsed())
            return cmd_forward(forward_images, forward_text, config_path, weights_path);
        if (app.get_subcommand("selftest")->parsed()) return cmd_selftest();
        if (eval_parse->parsed())
            return cmd_eval_parse(eval_in, eval_metric, eval_levels, eval_json_out);
        if (eval_judge->parsed())
            return cmd_eval_judge(judge_data, candidate_url, judge_url, concurrency,
                                  candidate_model, judge_model, judge_json_out);
        if (weights_init->parsed()) return cmd_weights_init(config_path, seed, weights_out);
    } catch (const vitmm::RemoteError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRemote;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
