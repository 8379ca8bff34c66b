#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <thread>

#include "glean/composite.hpp"
#include "glean/csv.hpp"
#include "glean/error.hpp"
#include "glean/image.hpp"
#include "glean/pipeline.hpp"

namespace glean::pipeline {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

// Reads a CSV with the given header; each row must have the header's width.
std::vector<std::vector<std::string>> read_table(const fs::path& path, const std::vector<std::string>& header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("stage file not found: " + path.string());
    std::vector<std::string> fields;
    if (!csv::read_row(in, fields) || fields != header)
        throw SchemaError(path.string() + ": unexpected header");
    std::vector<std::vector<std::string>> rows;
    int line = 1;
    while (csv::read_row(in, fields)) {
        ++line;
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != header.size())
            throw SchemaError(path.filename().string() + ":" + std::to_string(line) + ": expected " +
                              std::to_string(header.size()) + " columns");
        rows.push_back(fields);
    }
    return rows;
}

double to_double(const std::string& s, const fs::path& path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw SchemaError(path.filename().string() + ": not a number: \"" + s + "\"");
    }
}

std::string exact(double v) { return csv::format_double(v, 17); }

const std::vector<std::string> kRejectionHeader{"file", "prompt", "reasons", "d_left", "d_right",
                                                "dx",   "dy",     "nose_offset_px"};
const std::vector<std::string> kTransformHeader{"file", "prompt", "model", "rotation_rad", "scale", "tx", "ty"};
const std::vector<std::string> kCompositeHeader{"prompt", "model", "file", "n_sources"};
const std::vector<std::string> kErrorHeader{"prompt", "file", "message"};

// Runs fn(i) for i in [0, n) over a small pool; callers write results by index.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Stage files

void write_rejections(const fs::path& path, const std::vector<Rejection>& rows) {
    auto out = open_out(path);
    csv::write_row(out, kRejectionHeader);
    for (const auto& r : rows) {
        const auto& d = r.decision;
        csv::write_row(out, {r.file, r.prompt, posefilter::join_reasons(d.reasons), exact(d.d_left), exact(d.d_right),
                             exact(d.dx), exact(d.dy), exact(d.nose_offset_px)});
    }
}

std::vector<Rejection> read_rejections(const fs::path& path) {
    std::vector<Rejection> out;
    for (const auto& f : read_table(path, kRejectionHeader)) {
        Rejection r;
        r.file = f[0];
        r.prompt = f[1];
        std::size_t start = 0;
        while (start < f[2].size()) {
            auto end = f[2].find(';', start);
            if (end == std::string::npos) end = f[2].size();
            const auto token = f[2].substr(start, end - start);
            bool known = false;
            for (auto reason : {posefilter::Reason::NoFace, posefilter::Reason::NoseOffcenter,
                                posefilter::Reason::EyeImbalance, posefilter::Reason::ExcessTilt}) {
                if (posefilter::to_string(reason) == token) {
                    r.decision.reasons.insert(reason);
                    known = true;
                }
            }
            if (!known) throw SchemaError(path.filename().string() + ": unknown rejection reason " + token);
            start = end + 1;
        }
        if (r.decision.reasons.empty()) throw SchemaError(path.filename().string() + ": rejection without reason");
        r.decision.d_left = to_double(f[3], path);
        r.decision.d_right = to_double(f[4], path);
        r.decision.dx = to_double(f[5], path);
        r.decision.dy = to_double(f[6], path);
        r.decision.nose_offset_px = to_double(f[7], path);
        out.push_back(std::move(r));
    }
    return out;
}

void write_transforms(const fs::path& path, const std::vector<AlignedRecord>& rows) {
    auto out = open_out(path);
    csv::write_row(out, kTransformHeader);
    for (const auto& r : rows) {
        csv::write_row(out, {r.file, r.prompt, r.model, exact(r.xf.rotation_rad), exact(r.xf.scale), exact(r.xf.tx),
                             exact(r.xf.ty)});
    }
}

std::vector<AlignedRecord> read_transforms(const fs::path& path) {
    std::vector<AlignedRecord> out;
    for (const auto& f : read_table(path, kTransformHeader)) {
        AlignedRecord r;
        r.file = f[0];
        r.prompt = f[1];
        r.model = f[2];
        r.xf.rotation_rad = to_double(f[3], path);
        r.xf.scale = to_double(f[4], path);
        r.xf.tx = to_double(f[5], path);
        r.xf.ty = to_double(f[6], path);
        out.push_back(std::move(r));
    }
    return out;
}

void write_composites(const fs::path& path, const std::vector<CompositeRecord>& rows) {
    auto out = open_out(path);
    csv::write_row(out, kCompositeHeader);
    for (const auto& r : rows) csv::write_row(out, {r.prompt, r.model, r.file, std::to_string(r.n_sources)});
}

std::vector<CompositeRecord> read_composites(const fs::path& path) {
    std::vector<CompositeRecord> out;
    for (const auto& f : read_table(path, kCompositeHeader)) {
        const double n = to_double(f[3], path);
        if (n < 1 || n != static_cast<int>(n)) throw SchemaError(path.filename().string() + ": bad n_sources");
        out.push_back({f[0], f[1], f[2], static_cast<int>(n)});
    }
    return out;
}

void write_stage_errors(const fs::path& path, const std::vector<StageError>& errors) {
    auto out = open_out(path);
    csv::write_row(out, kErrorHeader);
    for (const auto& e : errors) csv::write_row(out, {e.prompt, e.file, e.message});
}

std::vector<StageError> read_stage_errors(const fs::path& path) {
    if (!fs::exists(path)) return {};
    std::vector<StageError> out;
    for (const auto& f : read_table(path, kErrorHeader)) out.push_back({f[0], f[1], f[2]});
    return out;
}

// ---------------------------------------------------------------------------
// Stages

FilterOutput filter_stage(const acquisition::Manifest& manifest, const landmarks::LandmarkIndex& lms,
                          const posefilter::FilterConfig& cfg) {
    FilterOutput out;
    for (const auto& rec : manifest.records) {
        const auto file = rec.path.filename().string();
        posefilter::FilterDecision d;
        auto it = lms.find(file);
        if (it == lms.end()) {
            d.reasons.insert(posefilter::Reason::NoFace);
        } else {
            d = posefilter::validate_pose(it->second, cfg);
        }
        if (d.accepted) {
            out.accepted.push_back(rec);
        } else {
            out.rejections.push_back({file, rec.prompt, d});
        }
    }
    return out;
}

AlignOutput align_stage(const std::vector<acquisition::ImageRecord>& accepted, const landmarks::LandmarkIndex& lms,
                        const align::AlignmentTarget& target, const fs::path& output_dir, unsigned workers) {
    const auto dir = output_dir / "aligned";
    fs::create_directories(dir);

    std::vector<std::optional<AlignedRecord>> done(accepted.size());
    std::vector<std::optional<StageError>> failed(accepted.size());
    parallel_for(accepted.size(), workers, [&](std::size_t i) {
        const auto& rec = accepted[i];
        const auto file = rec.path.filename().string();
        try {
            const auto& lm = lms.at(file);
            const auto xf = align::compute_alignment(landmarks::extract_anchors(lm), target);
            const auto image = read_png(rec.path);
            if (image.width() != lm.image_width || image.height() != lm.image_height) {
                throw SchemaError("image is " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                                  " but its landmarks say " + std::to_string(lm.image_width) + "x" +
                                  std::to_string(lm.image_height));
            }
            write_png(dir / file, align::apply_transform(image, xf, target, file).pixels);
            done[i] = AlignedRecord{file, rec.prompt, rec.model_id, xf};
        } catch (const std::out_of_range&) {
            failed[i] = StageError{rec.prompt, file, "align: no landmarks"};
        } catch (const std::exception& ex) {
            failed[i] = StageError{rec.prompt, file, std::string("align: ") + ex.what()};
        }
    });

    AlignOutput out;
    for (std::size_t i = 0; i < accepted.size(); ++i) {
        if (done[i]) out.aligned.push_back(std::move(*done[i]));
        if (failed[i]) out.errors.push_back(std::move(*failed[i]));
    }
    return out;
}

ComposeOutput compose_stage(const std::vector<AlignedRecord>& aligned, const fs::path& output_dir,
                            const std::set<std::string>& excluded, unsigned workers) {
    const auto dir = output_dir / "composites";
    fs::create_directories(dir);

    std::map<std::string, std::vector<const AlignedRecord*>> by_prompt;
    for (const auto& r : aligned)
        if (!excluded.contains(r.file)) by_prompt[r.prompt].push_back(&r);

    ComposeOutput out;
    for (const auto& [prompt, records] : by_prompt) {
        composite::ImageStack stack;
        stack.prompt = prompt;
        std::string model = records.front()->model;
        try {
            for (const auto* r : records) {
                if (r->model != model) model = "mixed";
                stack.images.push_back({read_png(output_dir / "aligned" / r->file), r->file});
            }
            const auto comp = composite::median_composite(stack, workers);
            const auto name = composite::composite_name(model, prompt, comp.n_sources);
            write_png(dir / name, comp.pixels);
            out.composites.push_back({prompt, model, name, comp.n_sources});
        } catch (const std::exception& ex) {
            out.errors.push_back({prompt, {}, std::string("compose: ") + ex.what()});
        }
    }
    return out;
}

}  // namespace glean::pipeline
