#include "commands.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "beachseg/beachseg.hpp"

namespace fs = std::filesystem;

namespace beachseg::cli {
namespace {

using json = nlohmann::json;

Error with_locus(const Error& e, const std::string& where) {
  return Error(e.kind(), where + ": " + e.message());
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool has_extension(const fs::path& p, std::initializer_list<const char*> exts) {
  const std::string ext = lower(p.extension().string());
  return std::any_of(exts.begin(), exts.end(), [&](const char* e) { return ext == e; });
}

/// Files are taken as given; directories contribute their matching files in
/// name order. Stems must be unique because outputs are named by stem.
std::vector<fs::path> collect_inputs(const std::vector<std::string>& inputs,
                                     std::initializer_list<const char*> exts) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && has_extension(entry.path(), exts)) {
          found.push_back(entry.path());
        }
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(p)) {
      files.push_back(p);
    } else {
      throw Error(ErrorKind::Io, "no such file or directory: " + in);
    }
  }
  if (files.empty()) throw Error(ErrorKind::InvalidArgument, "no input images");
  std::set<std::string> stems;
  for (const auto& f : files) {
    if (!stems.insert(f.stem().string()).second) {
      throw Error(ErrorKind::InvalidArgument, "two inputs share the stem '" +
                                                  f.stem().string() + "'");
    }
  }
  return files;
}

std::string dump(const ordered_json& doc) { return doc.dump(2) + "\n"; }

template <typename Fn>
auto located(const fs::path& file, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw with_locus(e, file.string());
  }
}

// ---------------------------------------------------------------- inspect

ordered_json metadata_json(const std::string& file, const FlightMetadata& m) {
  ordered_json j;
  j["file"] = file;
  if (m.latitude) j["latitude"] = *m.latitude;
  if (m.longitude) j["longitude"] = *m.longitude;
  if (m.altitude) j["altitude"] = *m.altitude;
  if (m.altitude_ref) j["altitude_ref"] = *m.altitude_ref;
  if (m.shutter) j["shutter"] = {m.shutter->numerator, m.shutter->denominator};
  if (m.aperture) j["aperture"] = {m.aperture->numerator, m.aperture->denominator};
  if (m.iso) j["iso"] = *m.iso;
  return j;
}

// ---------------------------------------------------------------- tile

struct TiledImage {
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> tiles;  // name, PNG
  std::vector<std::vector<TileAnnotation>> annotations;                   // per tile
  std::vector<LineageRow> lineage;
};

/// Exact file name first, then a unique stem match (enhanced PNGs keep the
/// stem of the JPEG the annotations were drawn on).
const ImageRecord* match_record(const Corpus& corpus, const fs::path& file) {
  if (const auto* r = corpus.find_image(file.filename().string())) return r;
  const ImageRecord* found = nullptr;
  for (const auto& img : corpus.images) {
    if (fs::path(img.id).stem() == file.stem()) {
      if (found) {
        throw Error(ErrorKind::MalformedAnnotation,
                    "several annotation records match '" + file.filename().string() + "'");
      }
      found = &img;
    }
  }
  return found;
}

// ---------------------------------------------------------------- export

void bind_sizes(Corpus& corpus, const std::string& images_dir) {
  for (auto& img : corpus.images) {
    if (img.width > 0 && img.height > 0) continue;
    if (images_dir.empty()) {
      throw Error(ErrorKind::InvalidArgument,
                  "size of '" + img.id + "' is unknown; pass --images to read it from the file");
    }
    const fs::path file = fs::path(images_dir) / img.file_path;
    const auto size = located(file, [&] { return probe_image_size(read_file_bytes(file)); });
    img.width = size.width;
    img.height = size.height;
  }
}

// ---------------------------------------------------------------- evaluate

struct FrameSize {
  int width = 0, height = 0;
};

BitMask rasterize_union(const std::vector<Polygon>& polygons, FrameSize f) {
  const PixelRect frame{0, 0, f.width, f.height};
  BitMask mask(f.width, f.height);
  for (const auto& p : polygons) {
    scan_polygon(p, frame, [&](int row, int c0, int c1) {
      for (int c = c0; c < c1; ++c) mask.set(c, row);
    });
  }
  return mask;
}

InstanceScores evaluate_instance_files(const EvaluateArgs& args, const PipelineConfig& cfg) {
  const auto truth = parse_coco_instances(read_file_text(args.truth), args.truth);
  std::map<std::string, FrameSize> frames;
  for (const auto& img : truth.corpus.images) {
    if (img.width < 1 || img.height < 1) {
      throw Error(ErrorKind::MalformedAnnotation,
                  args.truth + ": image '" + img.id + "' has no width/height");
    }
    frames[img.id] = {img.width, img.height};
  }

  // Predictions resolved to (image name, instance).
  std::vector<std::pair<std::string, CocoInstance>> preds;
  const std::string pred_text = read_file_text(args.pred);
  const bool is_document = !pred_text.empty() && json::parse(pred_text, nullptr, false).is_object();
  if (is_document) {
    auto doc = parse_coco_instances(pred_text, args.pred);
    for (auto& inst : doc.instances) {
      const std::string& name = doc.image_names.at(inst.image_id);
      preds.emplace_back(name, std::move(inst));
    }
  } else {
    for (auto& inst : parse_coco_results(pred_text, truth.corpus.label_set, args.pred)) {
      auto it = truth.image_names.find(inst.image_id);
      if (it == truth.image_names.end()) {
        throw Error(ErrorKind::MalformedAnnotation,
                    args.pred + ": image_id " + std::to_string(inst.image_id) +
                        " is not in the truth file");
      }
      preds.emplace_back(it->second, std::move(inst));
    }
  }
  for (const auto& [name, inst] : preds) {
    if (!frames.contains(name)) {
      throw Error(ErrorKind::MalformedAnnotation,
                  args.pred + ": image '" + name + "' is not in the truth file");
    }
  }

  std::vector<InstanceTruth> truths(truth.instances.size());
  parallel_for(truth.instances.size(), cfg.jobs, [&](std::size_t i) {
    const auto& inst = truth.instances[i];
    const std::string& name = truth.image_names.at(inst.image_id);
    truths[i] = {name, inst.class_label, rasterize_union(inst.polygons, frames.at(name))};
  });
  std::vector<InstancePrediction> predictions(preds.size());
  parallel_for(preds.size(), cfg.jobs, [&](std::size_t i) {
    const auto& [name, inst] = preds[i];
    predictions[i] = {name, inst.class_label, inst.score,
                      rasterize_union(inst.polygons, frames.at(name))};
  });
  return evaluate_instances(predictions, truths, truth.corpus.label_set, cfg.instance_eval());
}

PanopticMap load_panoptic(const fs::path& sidecar) {
  return located(sidecar, [&] {
    fs::path png = sidecar;
    png.replace_extension(".png");
    json meta;
    try {
      meta = json::parse(read_file_text(sidecar));
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::MalformedAnnotation, std::string("invalid JSON: ") + e.what());
    }
    return panoptic_from_rgb(read_image(png), meta);
  });
}

PanopticScores evaluate_panoptic_dirs(const EvaluateArgs& args, const PipelineConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(args.truth_panoptic)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) {
    throw Error(ErrorKind::InvalidArgument, "no panoptic sidecars in " + args.truth_panoptic);
  }
  for (const auto& name : names) {
    if (!fs::exists(fs::path(args.pred_panoptic) / name)) {
      throw Error(ErrorKind::MalformedAnnotation,
                  args.pred_panoptic + ": missing prediction for " + name);
    }
  }
  std::vector<std::optional<PanopticMap>> truth(names.size()), pred(names.size());
  parallel_for(names.size(), cfg.jobs, [&](std::size_t i) {
    truth[i] = load_panoptic(fs::path(args.truth_panoptic) / names[i]);
    pred[i] = load_panoptic(fs::path(args.pred_panoptic) / names[i]);
  });
  std::vector<PanopticPair> pairs;
  for (std::size_t i = 0; i < names.size(); ++i) {
    pairs.push_back({fs::path(names[i]).stem().string(), &*pred[i], &*truth[i]});
  }
  return evaluate_panoptic(pairs);
}

}  // namespace

// ---------------------------------------------------------------- commands

int run_inspect(const InspectArgs& args, const PipelineConfig& cfg) {
  const auto files = collect_inputs(args.inputs, {".jpg", ".jpeg"});
  std::vector<std::string> lines(files.size());
  parallel_for(files.size(), cfg.jobs, [&](std::size_t i) {
    const auto meta = located(files[i], [&] { return parse_exif(read_file_bytes(files[i])); });
    lines[i] = metadata_json(files[i].filename().string(), meta).dump() + "\n";
  });
  std::string out;
  for (const auto& l : lines) out += l;
  if (args.output.empty()) {
    std::cout << out;
  } else {
    StagedFile file(args.output);
    write_file_text(file.path(), out);
    file.commit();
  }
  return kExitOk;
}

int run_enhance(const EnhanceArgs& args, const PipelineConfig& cfg) {
  const auto files = collect_inputs(args.inputs, {".jpg", ".jpeg", ".png"});
  std::vector<std::vector<std::uint8_t>> pngs(files.size());
  std::vector<std::string> audits(files.size());
  parallel_for(files.size(), cfg.jobs, [&](std::size_t i) {
    located(files[i], [&] {
      const auto result = auto_enhance(read_image(files[i]), cfg.clip_percent);
      pngs[i] = encode_png(result.image);
      audits[i] = "source=" + files[i].filename().string() + "\n" +
                  format_audit_record(result.stretch, cfg.clip_percent);
    });
  });
  StagedDirectory out(args.output_dir);
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string stem = files[i].stem().string();
    write_file_bytes(out.path(stem + ".png"), pngs[i]);
    write_file_text(out.path(stem + ".stretch.txt"), audits[i]);
  }
  out.commit();
  return kExitOk;
}

int run_tile(const TileArgs& args, const PipelineConfig& cfg) {
  const auto files = collect_inputs(args.inputs, {".jpg", ".jpeg", ".png"});
  ViaOptions opts;
  opts.label_set = cfg.labels;
  opts.source_name = args.via;
  const auto via = parse_via(read_file_text(args.via), opts);
  if (via.dropped_unknown_label > 0) {
    std::cerr << "warning: dropped " << via.dropped_unknown_label
              << " region(s) with labels outside the label set: " << join(via.unknown_labels, ", ")
              << "\n";
  }
  if (via.skipped_non_polygon > 0) {
    std::cerr << "warning: skipped " << via.skipped_non_polygon << " non-polygon region(s)\n";
  }

  std::vector<TiledImage> results(files.size());
  parallel_for(files.size(), cfg.jobs, [&](std::size_t i) {
    located(files[i], [&] {
      const RasterImage image = read_image(files[i]);
      const TilePlan plan = plan_tiles(image.width(), image.height(), cfg.tile_size, cfg.tile_policy);
      std::vector<AnnotatedRegion> regions;
      if (const ImageRecord* rec = match_record(via.corpus, files[i])) {
        for (const AnnotatedRegion* r : via.corpus.regions_for(rec->id)) regions.push_back(*r);
      }
      TiledImage& out = results[i];
      out.annotations = remap_annotations(regions, plan);
      const std::string stem = files[i].stem().string();
      for (const Tile& t : plan.tiles) {
        const std::string name = tile_file_name(stem, t);
        out.tiles.emplace_back(name, encode_png(extract_tile(image, plan, t)));
        out.lineage.push_back({name, files[i].filename().string(), t, plan.tile_size, plan.policy});
      }
    });
  });

  // Tile-level corpus with fresh region ids; parents kept alongside.
  Corpus tiles;
  tiles.label_set = cfg.labels;
  std::vector<std::uint64_t> parents;
  std::vector<LineageRow> lineage;
  for (const auto& r : results) {
    for (std::size_t t = 0; t < r.tiles.size(); ++t) {
      const std::string& name = r.tiles[t].first;
      tiles.images.push_back({name, name, cfg.tile_size, cfg.tile_size});
      for (const auto& a : r.annotations[t]) {
        tiles.regions.push_back({tiles.regions.size() + 1, name, a.class_label, a.polygon});
        parents.push_back(a.parent_region_id);
      }
    }
    lineage.insert(lineage.end(), r.lineage.begin(), r.lineage.end());
  }
  ordered_json doc = write_via(tiles);
  std::size_t k = 0;
  for (auto& record : doc.items()) {
    for (auto& region : record.value()["regions"]) {
      region["region_attributes"]["parent_region_id"] = parents[k++];
    }
  }

  StagedDirectory out(args.output_dir);
  for (const auto& r : results) {
    for (const auto& [name, png] : r.tiles) write_file_bytes(out.path(fs::path("tiles") / name), png);
  }
  write_file_text(out.path("annotations.json"), dump(doc));
  write_file_text(out.path("lineage.csv"), lineage_csv(lineage));
  out.commit();
  std::cerr << "tiled " << files.size() << " image(s) into " << tiles.images.size()
            << " tile(s) carrying " << tiles.regions.size() << " region(s)\n";
  return kExitOk;
}

int run_split(const SplitArgs& args, const PipelineConfig& cfg) {
  ViaOptions opts;
  opts.label_set = cfg.labels;
  opts.source_name = args.corpus;
  const auto via = parse_via(read_file_text(args.corpus), opts);
  const auto assignment = split(via.corpus, cfg.split_fractions, cfg.seed);
  StagedFile file(args.output);
  write_file_text(file.path(), manifest_csv(assignment));
  file.commit();
  const auto sizes = assignment.group_sizes();
  std::cerr << "train=" << sizes[0] << " test=" << sizes[1] << " val=" << sizes[2] << "\n";
  return kExitOk;
}

int run_export(const ExportArgs& args, const PipelineConfig& cfg) {
  if (args.format != "coco" && args.format != "panoptic" && args.format != "all") {
    throw Error(ErrorKind::InvalidArgument, "--format must be coco, panoptic or all");
  }
  ViaOptions opts;
  opts.label_set = cfg.labels;
  opts.source_name = args.corpus;
  Corpus corpus = parse_via(read_file_text(args.corpus), opts).corpus;
  bind_sizes(corpus, args.images_dir);
  corpus.validate();

  std::map<std::string, SplitGroup> assignment;
  if (!args.manifest.empty()) {
    assignment = located(args.manifest, [&] { return parse_manifest_csv(read_file_text(args.manifest)); });
    for (const auto& img : corpus.images) {
      if (!assignment.contains(img.id)) {
        throw Error(ErrorKind::InvalidArgument,
                    args.manifest + ": image '" + img.id + "' has no split group");
      }
    }
  } else if (args.group) {
    throw Error(ErrorKind::InvalidArgument, "--group needs --manifest");
  }
  std::optional<SplitGroup> only;
  if (args.group) only = parse_split_group(*args.group);
  auto selected = [&](const ImageRecord& img) {
    return !only || assignment.at(img.id) == *only;
  };

  StagedDirectory out(args.output_dir);
  if (args.format != "panoptic") {
    if (args.manifest.empty()) {
      write_file_text(out.path("instances_all.json"),
                      dump(export_coco_instances(corpus, assignment, std::nullopt)));
    } else {
      for (SplitGroup g : kSplitGroups) {
        if (only && g != *only) continue;
        write_file_text(out.path("instances_" + std::string(to_string(g)) + ".json"),
                        dump(export_coco_instances(corpus, assignment, g)));
      }
    }
  }
  if (args.format != "coco") {
    std::vector<const ImageRecord*> images;
    for (const auto& img : corpus.images) {
      if (selected(img)) images.push_back(&img);
    }
    std::vector<std::vector<std::uint8_t>> pngs(images.size());
    std::vector<std::string> sidecars(images.size());
    parallel_for(images.size(), cfg.jobs, [&](std::size_t i) {
      const PanopticMap map = export_panoptic_truth(corpus, images[i]->id);
      const std::string stem = fs::path(images[i]->id).stem().string();
      pngs[i] = encode_png(panoptic_to_rgb(map));
      sidecars[i] = dump(panoptic_sidecar(map, stem + ".png"));
    });
    std::set<std::string> stems;
    for (std::size_t i = 0; i < images.size(); ++i) {
      const std::string stem = fs::path(images[i]->id).stem().string();
      if (!stems.insert(stem).second) {
        throw Error(ErrorKind::InvalidArgument, "two images share the stem '" + stem + "'");
      }
      write_file_bytes(out.path(fs::path("panoptic") / (stem + ".png")), pngs[i]);
      write_file_text(out.path(fs::path("panoptic") / (stem + ".json")), sidecars[i]);
    }
  }
  out.commit();
  return kExitOk;
}

int run_evaluate(const EvaluateArgs& args, const PipelineConfig& cfg) {
  const bool instance = !args.truth.empty() || !args.pred.empty();
  const bool panoptic = !args.truth_panoptic.empty() || !args.pred_panoptic.empty();
  if (!instance && !panoptic) {
    throw Error(ErrorKind::InvalidArgument,
                "give --truth/--pred and/or --truth-panoptic/--pred-panoptic");
  }
  if (instance && (args.truth.empty() || args.pred.empty())) {
    throw Error(ErrorKind::InvalidArgument, "--truth and --pred go together");
  }
  if (panoptic && (args.truth_panoptic.empty() || args.pred_panoptic.empty())) {
    throw Error(ErrorKind::InvalidArgument, "--truth-panoptic and --pred-panoptic go together");
  }
  MetricsReport report;
  report.model = args.model;
  if (instance) report.instance = evaluate_instance_files(args, cfg);
  if (panoptic) report.panoptic = evaluate_panoptic_dirs(args, cfg);
  if (!args.output.empty()) {
    StagedFile file(args.output);
    write_file_text(file.path(), dump(report_to_json(report)));
    file.commit();
  }
  std::cout << format_report_table(report);
  return kExitOk;
}

int run_loss_check(const LossCheckArgs& args, const PipelineConfig&) {
  const auto rows = run_gradient_checks(args.instances, args.seed);
  bool ok = true;
  std::printf("%-24s %10s %9s %14s  %s\n", "loss", "instances", "failures", "worst_rel_err",
              "result");
  for (const auto& r : rows) {
    std::printf("%-24s %10zu %9zu %14.3e  %s\n", r.loss.c_str(), r.instances, r.failures,
                r.worst_relative_error, r.passed() ? "PASS" : "FAIL");
    ok = ok && r.passed();
  }
  return ok ? kExitOk : kExitData;
}

}  // namespace beachseg::cli
