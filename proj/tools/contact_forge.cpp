// contact-forge: contact annotation generation, conversion, training and
// evaluation from the command line.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "contactforge/annotations.hpp"
#include "contactforge/body_model.hpp"
#include "contactforge/contact_gen.hpp"
#include "contactforge/error.hpp"
#include "contactforge/metrics.hpp"
#include "contactforge/part_attention.hpp"
#include "contactforge/render2d.hpp"
#include "contactforge/synthetic.hpp"

namespace fs = std::filesystem;
using namespace contactforge;

namespace {

constexpr std::uint64_t kDefaultSeed = 20230601;

void require_file(const fs::path& path, const char* stage) {
    if (!fs::is_regular_file(path)) throw InputError(stage, "missing input file " + path.string());
}

void require_dir(const fs::path& path, const char* stage) {
    if (!fs::is_directory(path)) throw InputError(stage, "missing input directory " + path.string());
}

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_text(const fs::path& path, const std::string& text) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cli", "cannot write " + path.string());
    out << text;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string body, labels, scene, camera, out, out_vertices, out_png;
    double delta_d = 0.07;
    double delta_a = 110.0;
    int leaf_size = 8;
    unsigned threads = 0;
    bool scene_occlusion = false;
};

void run_generate(const GenerateArgs& a) {
    require_file(a.body, "body-model");
    require_file(a.labels, "body-model");
    require_file(a.scene, "contact-gen");
    require_file(a.camera, "render2d");
    const ContactThresholds th{a.delta_d, a.delta_a};
    th.check();

    const BodyMesh body = load_body(a.body, a.labels);
    const SceneMesh scene = load_scene(a.scene);
    const PinholeCamera cam = load_camera(a.camera);
    const SpatialIndex index = SpatialIndex::build(scene, static_cast<std::size_t>(a.leaf_size));

    const ContactVertexSet contacts = classify_contact(body, index, scene, th, a.threads);
    const PartFaces faces = contact_triangles(body, contacts);
    RasterOptions options;
    if (a.scene_occlusion) options.occluder = &scene;
    const ContactMap map = rasterize_contact(cam, body, faces, options);

    ensure_parent(a.out);
    write_contact_map_pgm(a.out, map);
    ensure_parent(a.out_vertices);
    write_contact_vertices(a.out_vertices, contacts);
    if (!a.out_png.empty()) {
        ensure_parent(a.out_png);
        write_contact_map_png(a.out_png, map);
    }
    std::size_t labeled = std::count_if(map.labels().begin(), map.labels().end(), [](auto l) { return l != 0; });
    std::printf("contact vertices: %zu, labeled pixels: %zu\n", contacts.size(), labeled);
}

struct DemoArgs {
    std::string out_dir;
    double left_sole = 0.02;
    double right_sole = 0.05;
};

void run_make_demo(const DemoArgs& a) {
    const fs::path dir = a.out_dir;
    fs::create_directories(dir);
    synthetic::StandingBodyOptions opts;
    opts.left_sole_height = a.left_sole;
    opts.right_sole_height = a.right_sole;
    BodyMesh body = synthetic::standing_body(opts);
    const RigidTransform to_cam = synthetic::demo_world_to_camera();
    synthetic::transform_body(body, to_cam);
    const SceneMesh floor = synthetic::transform_scene(synthetic::floor_scene(), to_cam);
    write_obj(dir / "body.obj", body.vertices, body.faces, *body.normals);
    write_part_labels(dir / "body.parts", body.part_of_vertex);
    write_obj(dir / "scene.obj", floor.vertices, floor.faces);
    save_camera(dir / "camera.json", synthetic::demo_camera());
    std::printf("wrote body.obj, body.parts, scene.obj, camera.json to %s\n", dir.string().c_str());
}

// ---------------------------------------------------------------------------

struct RasterizeArgs {
    std::string annotations, out_dir;
    bool png = false;
};

void run_rasterize(const RasterizeArgs& a) {
    require_file(a.annotations, "annot-io");
    const auto records = parse_annotations(a.annotations);
    fs::create_directories(a.out_dir);
    for (const auto& rec : records) {
        const ContactMap map = rasterize_polygons(rec);
        write_contact_map_pgm(fs::path(a.out_dir) / (rec.image_id + ".pgm"), map);
        if (a.png) write_contact_map_png(fs::path(a.out_dir) / (rec.image_id + ".png"), map);
    }
    std::printf("rasterized %zu records\n", records.size());
}

struct LiftArgs {
    std::string annotations, image_id, templ, labels, palm_sole, out;
};

void run_lift(const LiftArgs& a) {
    require_file(a.annotations, "annot-io");
    require_file(a.templ, "body-model");
    require_file(a.labels, "body-model");
    if (!a.palm_sole.empty()) require_file(a.palm_sole, "annot-io");
    const auto records = parse_annotations(a.annotations);
    if (records.empty()) throw InputError("annot-io", "annotation file has no records");
    auto it = records.begin();
    if (!a.image_id.empty()) {
        it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.image_id == a.image_id; });
        if (it == records.end()) throw InputError("annot-io", "no record with image_id '" + a.image_id + "'");
    }
    const BodyMesh body = load_body(a.templ, a.labels);
    const PalmSoleSubsets subsets = a.palm_sole.empty() ? PalmSoleSubsets{} : load_palm_sole_subsets(a.palm_sole);
    const auto vertices = lift_to_3d(*it, body, subsets);
    ensure_parent(a.out);
    write_vertex_indices(a.out, vertices);
    std::printf("lifted %zu vertices for '%s'\n", vertices.size(), it->image_id.c_str());
}

struct SplitArgs {
    std::string annotations, out_dir, group_sep;
    std::vector<double> ratios = {0.8, 0.1, 0.1};
    std::uint64_t seed = kDefaultSeed;
};

void run_split(const SplitArgs& a) {
    require_file(a.annotations, "annot-io");
    if (a.ratios.size() != 3) throw InputError("annot-io", "--ratios needs exactly three values");
    const auto records = parse_annotations(a.annotations);
    GroupKey key;
    if (!a.group_sep.empty()) {
        key = [sep = a.group_sep](const AnnotationRecord& r) { return r.image_id.substr(0, r.image_id.find(sep)); };
    }
    const auto split = split_dataset(records, {a.ratios[0], a.ratios[1], a.ratios[2]}, a.seed, key);
    fs::create_directories(a.out_dir);
    write_annotations(fs::path(a.out_dir) / "train.jsonl", split.train);
    write_annotations(fs::path(a.out_dir) / "val.jsonl", split.val);
    write_annotations(fs::path(a.out_dir) / "test.jsonl", split.test);
    std::printf("train %zu, val %zu, test %zu\n", split.train.size(), split.val.size(), split.test.size());
}

struct StatsArgs {
    std::string annotations, out;
};

void run_stats(const StatsArgs& a) {
    require_file(a.annotations, "annot-io");
    const std::string json = stats_to_json(dataset_stats(parse_annotations(a.annotations))) + "\n";
    if (a.out.empty()) std::fputs(json.c_str(), stdout);
    else write_text(a.out, json);
}

struct RescaleArgs {
    std::string annotations, out;
    int long_side = kDefaultLongSide;
};

void run_rescale(const RescaleArgs& a) {
    require_file(a.annotations, "annot-io");
    auto records = parse_annotations(a.annotations);
    for (auto& r : records) r = rescale_record(r, a.long_side);
    ensure_parent(a.out);
    write_annotations(a.out, records);
}

struct AgreementArgs {
    std::string a, b;
};

void run_agreement(const AgreementArgs& args) {
    require_file(args.a, "annot-io");
    require_file(args.b, "annot-io");
    const Agreement ag = agreement(read_contact_map_pgm(args.a), read_contact_map_pgm(args.b));
    std::printf("{\"part_agreement\": %.6f, \"pixel_agreement\": %.6f}\n", ag.part, ag.pixel);
}

// ---------------------------------------------------------------------------

struct ToyArgs {
    std::string out_dir;
};

void run_make_toy(const ToyArgs& a) {
    const fs::path dir = a.out_dir;
    fs::create_directories(dir);
    const auto samples = synthetic::toy_dataset();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::string id = "toy" + std::to_string(i);
        const GrayImage img = synthetic::tensor_to_image(samples[i].input);
        write_pgm(dir / (id + "_input.pgm"), img.width, img.height, img.pixels);
        write_contact_map_pgm(dir / (id + "_contact.pgm"), samples[i].contact);
        write_contact_map_pgm(dir / (id + "_parts.pgm"), samples[i].parts);
    }
    std::printf("wrote %zu toy samples to %s\n", samples.size(), dir.string().c_str());
}

std::vector<Sample> load_toy_dir(const fs::path& dir) {
    require_dir(dir, "part-attention");
    std::vector<fs::path> inputs;
    const std::string suffix = "_input.pgm";
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.size() > suffix.size() && name.ends_with(suffix)) inputs.push_back(e.path());
    }
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty()) throw InputError("part-attention", "no *_input.pgm files in " + dir.string());
    std::vector<Sample> out;
    for (const auto& in : inputs) {
        const std::string name = in.filename().string();
        const std::string id = name.substr(0, name.size() - suffix.size());
        Sample s{image_to_tensor(read_pgm(in)), read_contact_map_pgm(dir / (id + "_contact.pgm")),
                 read_contact_map_pgm(dir / (id + "_parts.pgm"))};
        out.push_back(std::move(s));
    }
    return out;
}

struct TrainArgs {
    std::string data, out, log;
    int epochs = 20;
    int batch_size = 24;
    double lr = 0.02;
    std::uint64_t seed = kDefaultSeed;
    std::vector<int> backbone = {8, 8};
    int attention_hidden = 8;
    int contact_channels = 8;
    int part_channels = 4;
    bool affine_norm = false;
};

void run_train(const TrainArgs& a) {
    const auto samples = load_toy_dir(a.data);
    HeadConfig config;
    config.input_channels = samples.front().input.channels;
    config.backbone_channels = a.backbone;
    config.attention_hidden = a.attention_hidden;
    config.contact_channels = a.contact_channels;
    config.part_channels = a.part_channels;
    config.affine_norm = a.affine_norm;

    TrainOptions opts;
    opts.epochs = a.epochs;
    opts.batch_size = a.batch_size;
    opts.base_lr = a.lr;
    opts.seed = a.seed;
    std::ostringstream log;
    log << "iteration,epoch,lr,lambda_a,loss,loss_attention,loss_contact\n";
    opts.on_iteration = [&](long iter, int epoch, double lr, const LossValue& l) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%ld,%d,%.8g,%.3g,%.10g,%.10g,%.10g\n", iter, epoch, lr,
                      scheduled_lambda_a(opts.loss, epoch), l.total, l.attention, l.contact);
        log << buf;
    };
    const HeadParams params = train_toy(samples, config, opts);
    ensure_parent(a.out);
    write_checkpoint(a.out, params);
    if (!a.log.empty()) write_text(a.log, log.str());

    ConfusionMatrix cm;
    for (const auto& s : samples) cm.add(predict(params, s.input), s.contact);
    const MetricSet m = metrics_from_confusion(cm);
    std::printf("trained %zu parameters; training SC-Acc %.4f, C-Acc %.4f\n", params.parameter_count(), m.sc_acc,
                m.c_acc);
}

struct PredictArgs {
    std::string checkpoint, input, out, out_png;
};

void run_predict(const PredictArgs& a) {
    require_file(a.checkpoint, "part-attention");
    require_file(a.input, "part-attention");
    const HeadParams params = read_checkpoint(a.checkpoint);
    const ContactMap map = predict(params, image_to_tensor(read_pgm(a.input)));
    ensure_parent(a.out);
    write_contact_map_pgm(a.out, map);
    if (!a.out_png.empty()) write_contact_map_png(a.out_png, map);
}

struct EvalArgs {
    std::string pred, gt, report;
    bool all_pixels = false;
};

void run_eval(const EvalArgs& a) {
    require_dir(a.pred, "metrics");
    require_dir(a.gt, "metrics");
    std::vector<fs::path> names;
    for (const auto& e : fs::directory_iterator(a.gt))
        if (e.path().extension() == ".pgm") names.push_back(e.path().filename());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw InputError("metrics", "no .pgm maps in " + a.gt);
    std::vector<ContactMap> preds, gts;
    for (const auto& n : names) {
        const fs::path p = fs::path(a.pred) / n;
        if (!fs::is_regular_file(p)) throw InputError("metrics", "no prediction for " + n.string());
        preds.push_back(read_contact_map_pgm(p));
        gts.push_back(read_contact_map_pgm(fs::path(a.gt) / n));
    }
    std::vector<EvalPair> pairs;
    for (std::size_t i = 0; i < preds.size(); ++i) pairs.push_back({&preds[i], &gts[i]});
    EvalOptions options;
    if (a.all_pixels) options.c_acc = CAccDenominator::AllPixels;
    const std::string json = report_to_json(evaluate_corpus(pairs, options));
    if (a.report.empty()) std::fputs(json.c_str(), stdout);
    else write_text(a.report, json);
}

struct GradcheckArgs {
    std::uint64_t seed = 1;
    int count = 5;
    bool affine_norm = false;
};

int run_gradcheck(const GradcheckArgs& a) {
    HeadConfig config;
    config.backbone_channels = {4, 4};
    config.attention_hidden = 4;
    config.contact_channels = 4;
    config.part_channels = 2;
    config.affine_norm = a.affine_norm;
    int failed = 0;
    for (int i = 0; i < a.count; ++i) {
        const auto r = gradient_check(config, a.seed + static_cast<std::uint64_t>(i));
        std::printf("seed %llu: %zu parameters, %zu failures, %zu refined, max |error| %.3g%s%s\n",
                    static_cast<unsigned long long>(a.seed + i), r.checked, r.failures, r.refined, r.max_abs_error,
                    r.failures ? " first: " : "", r.first_failure.c_str());
        failed += r.failures > 0;
    }
    return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"contact-forge: human-object contact annotation toolkit"};
    app.require_subcommand(1);
    app.allow_extras(false);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Classify body-scene contact and render the 2D contact map");
    generate->add_option("--body", gen.body, "Posed body mesh (OBJ)")->required();
    generate->add_option("--labels", gen.labels, "Per-vertex part labels, one id 1..17 per line")->required();
    generate->add_option("--scene", gen.scene, "Scene mesh (OBJ)")->required();
    generate->add_option("--camera", gen.camera, "Camera intrinsics JSON")->required();
    generate->add_option("--delta-d", gen.delta_d, "Distance threshold in meters")->capture_default_str();
    generate->add_option("--delta-a", gen.delta_a, "Normal angle threshold in degrees")->capture_default_str();
    generate->add_option("--out", gen.out, "Contact map output (PGM)")->required();
    generate->add_option("--out-vertices", gen.out_vertices, "Contact vertex list output")->required();
    generate->add_option("--out-png", gen.out_png, "Optional color PNG of the contact map");
    generate->add_option("--leaf-size", gen.leaf_size, "BVH leaf size")->capture_default_str();
    generate->add_option("--threads", gen.threads, "Worker threads (0 = all cores)")->capture_default_str();
    generate->add_flag("--scene-occlusion", gen.scene_occlusion, "Let scene geometry hide contact areas");

    DemoArgs demo;
    auto* make_demo = app.add_subcommand("make-demo", "Write a synthetic feet-on-floor body, scene and camera");
    make_demo->add_option("--out-dir", demo.out_dir, "Output directory")->required();
    make_demo->add_option("--left-sole", demo.left_sole, "Left sole height above the floor (m)")->capture_default_str();
    make_demo->add_option("--right-sole", demo.right_sole, "Right sole height above the floor (m)")->capture_default_str();

    RasterizeArgs ras;
    auto* rasterize = app.add_subcommand("rasterize", "Rasterize annotation polygons into contact maps");
    rasterize->add_option("--annotations", ras.annotations, "Annotation JSON / JSON-lines")->required();
    rasterize->add_option("--out-dir", ras.out_dir, "Output directory for <image_id>.pgm")->required();
    rasterize->add_flag("--png", ras.png, "Also write color PNGs");

    LiftArgs lift;
    auto* lift_cmd = app.add_subcommand("lift", "Lift a 2D part annotation to template body vertices");
    lift_cmd->add_option("--annotations", lift.annotations, "Annotation JSON / JSON-lines")->required();
    lift_cmd->add_option("--image-id", lift.image_id, "Record to lift (default: first)");
    lift_cmd->add_option("--template", lift.templ, "Template body mesh (OBJ)")->required();
    lift_cmd->add_option("--labels", lift.labels, "Template part labels")->required();
    lift_cmd->add_option("--palm-sole", lift.palm_sole, "JSON map part name -> vertex indices");
    lift_cmd->add_option("--out", lift.out, "Sorted vertex index output")->required();

    SplitArgs split;
    auto* split_cmd = app.add_subcommand("split", "Seeded train/val/test split of an annotation corpus");
    split_cmd->add_option("--annotations", split.annotations, "Annotation JSON-lines")->required();
    split_cmd->add_option("--ratios", split.ratios, "train val test ratios")->expected(3)->delimiter(',')->capture_default_str();
    split_cmd->add_option("--seed", split.seed, "Shuffle seed")->capture_default_str();
    split_cmd->add_option("--group-sep", split.group_sep, "Group records by image_id prefix before this separator");
    split_cmd->add_option("--out-dir", split.out_dir, "Directory for train/val/test.jsonl")->required();

    StatsArgs stats;
    auto* stats_cmd = app.add_subcommand("stats", "Per-part counts, contacts per image and size buckets");
    stats_cmd->add_option("--annotations", stats.annotations, "Annotation JSON-lines")->required();
    stats_cmd->add_option("--out", stats.out, "Output JSON (default: stdout)");

    RescaleArgs rescale;
    auto* rescale_cmd = app.add_subcommand("rescale", "Rescale records so the longer side has a fixed length");
    rescale_cmd->add_option("--annotations", rescale.annotations, "Annotation JSON-lines")->required();
    rescale_cmd->add_option("--long-side", rescale.long_side, "Target longer side in pixels")->capture_default_str();
    rescale_cmd->add_option("--out", rescale.out, "Output JSON-lines")->required();

    AgreementArgs agree;
    auto* agree_cmd = app.add_subcommand("agreement", "Part and pixel agreement between two contact maps");
    agree_cmd->add_option("--a", agree.a, "First contact map (PGM)")->required();
    agree_cmd->add_option("--b", agree.b, "Second contact map (PGM)")->required();

    ToyArgs toy;
    auto* make_toy = app.add_subcommand("make-toy", "Write the 4-image synthetic training set");
    make_toy->add_option("--out-dir", toy.out_dir, "Output directory")->required();

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train-toy", "Train the part-attention head on a toy PGM dataset");
    train_cmd->add_option("--data", train.data, "Directory of <id>_input/_contact/_parts.pgm")->required();
    train_cmd->add_option("--out", train.out, "Checkpoint output")->required();
    train_cmd->add_option("--log", train.log, "Per-iteration loss CSV");
    train_cmd->add_option("--epochs", train.epochs, "Epochs")->capture_default_str();
    train_cmd->add_option("--batch-size", train.batch_size, "Batch size (clamped to dataset size)")->capture_default_str();
    train_cmd->add_option("--lr", train.lr, "Base learning rate")->capture_default_str();
    train_cmd->add_option("--seed", train.seed, "Initialization and shuffle seed")->capture_default_str();
    train_cmd->add_option("--backbone", train.backbone, "Backbone conv channels")->delimiter(',')->capture_default_str();
    train_cmd->add_option("--attention-hidden", train.attention_hidden, "Attention 3x3 conv channels")->capture_default_str();
    train_cmd->add_option("--contact-channels", train.contact_channels, "Contact feature channels C")->capture_default_str();
    train_cmd->add_option("--part-channels", train.part_channels, "Per-part channels C'")->capture_default_str();
    train_cmd->add_flag("--affine-norm", train.affine_norm, "Per-channel affine normalization after 3x3 convs");

    PredictArgs pred;
    auto* predict_cmd = app.add_subcommand("predict", "Predict a contact map from a grayscale PGM");
    predict_cmd->add_option("--checkpoint", pred.checkpoint, "Checkpoint file")->required();
    predict_cmd->add_option("--input", pred.input, "Input image (PGM)")->required();
    predict_cmd->add_option("--out", pred.out, "Contact map output (PGM)")->required();
    predict_cmd->add_option("--out-png", pred.out_png, "Optional color PNG");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Score predicted contact maps against ground truth");
    eval_cmd->add_option("--pred", ev.pred, "Directory of predicted maps")->required();
    eval_cmd->add_option("--gt", ev.gt, "Directory of ground-truth maps (same file names)")->required();
    eval_cmd->add_option("--report", ev.report, "Report JSON (default: stdout)");
    eval_cmd->add_flag("--c-acc-all-pixels", ev.all_pixels, "Binary accuracy over all pixels instead of gt contact");

    GradcheckArgs gc;
    auto* gc_cmd = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
    gc_cmd->add_option("--seed", gc.seed, "First seed")->capture_default_str();
    gc_cmd->add_option("--count", gc.count, "Number of seeds")->capture_default_str();
    gc_cmd->add_flag("--affine-norm", gc.affine_norm, "Include the affine normalization layers");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*generate) run_generate(gen);
        else if (*make_demo) run_make_demo(demo);
        else if (*rasterize) run_rasterize(ras);
        else if (*lift_cmd) run_lift(lift);
        else if (*split_cmd) run_split(split);
        else if (*stats_cmd) run_stats(stats);
        else if (*rescale_cmd) run_rescale(rescale);
        else if (*agree_cmd) run_agreement(agree);
        else if (*make_toy) run_make_toy(toy);
        else if (*train_cmd) run_train(train);
        else if (*predict_cmd) run_predict(pred);
        else if (*eval_cmd) run_eval(ev);
        else if (*gc_cmd) return run_gradcheck(gc);
    } catch (const InputError& e) {
        std::fprintf(stderr, "error: %s: %s\n", e.stage().c_str(), e.what());
        return 2;
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "error: part-attention: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return 1;
    }
    return 0;
}
