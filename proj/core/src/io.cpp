#include "bcrisk/io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bcrisk/errors.hpp"

namespace bcrisk::io {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trimmed(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void row_error(const std::filesystem::path& path, std::size_t line,
                            const std::string& what) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::optional<double> parse_optional_double(const std::string& cell) {
    const std::string t = trimmed(cell);
    if (t.empty()) return std::nullopt;
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw DataError("trailing characters after number '" + t + "'");
    return v;
}

std::optional<int> parse_optional_int(const std::string& cell) {
    const std::string t = trimmed(cell);
    if (t.empty()) return std::nullopt;
    std::size_t used = 0;
    const int v = std::stoi(t, &used);
    if (used != t.size()) throw DataError("trailing characters after integer '" + t + "'");
    return v;
}

std::optional<capra::Flag> parse_optional_flag(const std::string& cell) {
    std::string t = trimmed(cell);
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t.empty()) return std::nullopt;
    if (t == "1" || t == "yes" || t == "y" || t == "positive" || t == "true") {
        return capra::Flag::Yes;
    }
    if (t == "0" || t == "no" || t == "n" || t == "negative" || t == "false") {
        return capra::Flag::No;
    }
    throw DataError("expected yes/no flag, got '" + cell + "'");
}

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return j;
}

void save_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << j.dump(2) << "\n";
}

json provenance_json(const Provenance& p) {
    return json{{"version", p.version}, {"seed", p.seed}, {"config_hash", p.config_hash}};
}

}  // namespace

std::vector<std::string> Provenance::comment_lines() const {
    return {"# bcrisk " + version + " seed=" + std::to_string(seed) +
            " config_hash=" + config_hash};
}

std::vector<CohortRow> read_cohort_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open cohort file '" + path.string() + "'");

    static const std::vector<std::string> kColumns = {
        "patient_id", "time_months", "event", "psa", "gleason_primary", "gleason_secondary",
        "pt_stage",   "pn_stage",    "sm",    "ece", "svi",             "lni",
        "isup",       "surgery_year", "ajcc_edition"};

    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<CohortRow> rows;
    std::set<std::string> seen_ids;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string content = trimmed(line);
        if (content.empty() || content[0] == '#') continue;
        const auto cells = split_csv_line(content);
        if (!header_seen) {
            if (cells.size() != kColumns.size()) {
                row_error(path, line_no,
                          "header has " + std::to_string(cells.size()) + " columns, expected " +
                              std::to_string(kColumns.size()));
            }
            for (std::size_t i = 0; i < kColumns.size(); ++i) {
                if (trimmed(cells[i]) != kColumns[i]) {
                    row_error(path, line_no, "column " + std::to_string(i + 1) + " is '" +
                                                 trimmed(cells[i]) + "', expected '" +
                                                 kColumns[i] + "'");
                }
            }
            header_seen = true;
            continue;
        }
        if (cells.size() != kColumns.size()) {
            row_error(path, line_no, "row has " + std::to_string(cells.size()) +
                                         " cells, expected " + std::to_string(kColumns.size()));
        }
        try {
            CohortRow row;
            row.patient_id = trimmed(cells[0]);
            if (row.patient_id.empty()) throw DataError("empty patient_id");
            if (!seen_ids.insert(row.patient_id).second) {
                throw DataError("duplicate patient_id '" + row.patient_id + "'");
            }
            const auto time = parse_optional_double(cells[1]);
            if (!time || *time <= 0.0) throw DataError("time_months must be > 0");
            row.time_months = *time;
            const auto event = parse_optional_int(cells[2]);
            if (!event || (*event != 0 && *event != 1)) throw DataError("event must be 0 or 1");
            row.event = *event == 1;

            auto& clin = row.clinical;
            clin.patient_id = row.patient_id;
            clin.psa = parse_optional_double(cells[3]);
            if (clin.psa && *clin.psa < 0.0) throw DataError("psa must be >= 0");
            clin.gleason_primary = parse_optional_int(cells[4]);
            clin.gleason_secondary = parse_optional_int(cells[5]);
            clin.pt_stage = capra::parse_t_stage(trimmed(cells[6]));
            clin.pn_stage = capra::parse_n_stage(trimmed(cells[7]));
            clin.surgical_margin = parse_optional_flag(cells[8]);
            clin.ece = parse_optional_flag(cells[9]);
            clin.svi = parse_optional_flag(cells[10]);
            clin.lni = parse_optional_flag(cells[11]);
            row.isup = parse_optional_int(cells[12]);
            if (row.isup && (*row.isup < 1 || *row.isup > 5)) {
                throw DataError("isup must be in 1..5");
            }
            row.surgery_year = parse_optional_int(cells[13]);
            const auto edition = parse_optional_int(cells[14]);
            clin.ajcc_edition = edition.value_or(8);
            if (clin.ajcc_edition != 4 && clin.ajcc_edition != 5 && clin.ajcc_edition != 8) {
                throw DataError("ajcc_edition must be 4, 5 or 8");
            }
            rows.push_back(std::move(row));
        } catch (const DataError& e) {
            row_error(path, line_no, e.what());
        } catch (const std::exception& e) {
            row_error(path, line_no, std::string("malformed cell: ") + e.what());
        }
    }
    if (!header_seen) throw DataError(path.string() + ": empty cohort file");
    if (rows.empty()) throw DataError(path.string() + ": cohort has no data rows");
    return rows;
}

std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open scores file '" + path.string() + "'");
    std::vector<ScoreRow> rows;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string content = trimmed(line);
        if (content.empty() || content[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // "patient_id,score"
            continue;
        }
        const auto cells = split_csv_line(content);
        if (cells.size() != 2) row_error(path, line_no, "expected patient_id,score");
        try {
            const auto score = parse_optional_double(cells[1]);
            if (!score) throw DataError("missing score");
            rows.push_back({trimmed(cells[0]), *score});
        } catch (const std::exception& e) {
            row_error(path, line_no, e.what());
        }
    }
    if (rows.empty()) throw DataError(path.string() + ": no score rows");
    return rows;
}

void write_scores_csv(const std::filesystem::path& path, std::span<const ScoreRow> rows,
                      const Provenance& provenance) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    for (const auto& c : provenance.comment_lines()) out << c << "\n";
    out << "patient_id,score\n";
    out.precision(17);
    for (const auto& row : rows) out << row.patient_id << "," << row.score << "\n";
}

mil::FeatureBag read_bag(const std::filesystem::path& directory) {
    const json manifest = load_json(directory / "manifest.json");
    mil::FeatureBag bag;
    bag.patient_id = manifest.at("patient_id").get<std::string>();
    bag.feature_dim = manifest.at("feature_dim").get<std::size_t>();
    for (const auto& region_file : manifest.at("regions")) {
        const std::filesystem::path path = directory / region_file.get<std::string>();
        std::ifstream in(path);
        if (!in) throw DataError("cannot open region file '" + path.string() + "'");
        std::vector<double> rows;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::string content = trimmed(line);
            if (content.empty() || content[0] == '#') continue;
            const auto cells = split_csv_line(content);
            if (cells.size() != bag.feature_dim) {
                row_error(path, line_no, "expected " + std::to_string(bag.feature_dim) +
                                             " features per tile");
            }
            for (const auto& cell : cells) {
                const auto v = parse_optional_double(cell);
                if (!v) row_error(path, line_no, "empty feature cell");
                rows.push_back(*v);
            }
        }
        bag.regions.push_back(std::move(rows));
    }
    bag.validate(true);
    return bag;
}

void write_bag(const std::filesystem::path& directory, const mil::FeatureBag& bag) {
    std::filesystem::create_directories(directory);
    json manifest;
    manifest["patient_id"] = bag.patient_id;
    manifest["feature_dim"] = bag.feature_dim;
    json regions = json::array();
    for (std::size_t r = 0; r < bag.regions.size(); ++r) {
        char name[32];
        std::snprintf(name, sizeof(name), "region_%03zu.csv", r);
        regions.push_back(name);
        std::ofstream out(directory / name);
        if (!out) throw DataError("cannot write region file in '" + directory.string() + "'");
        out.precision(17);
        const std::size_t tiles = bag.tiles_in(r);
        for (std::size_t t = 0; t < tiles; ++t) {
            for (std::size_t j = 0; j < bag.feature_dim; ++j) {
                out << bag.feature(r, t, j) << (j + 1 == bag.feature_dim ? "\n" : ",");
            }
        }
    }
    manifest["regions"] = regions;
    save_json(directory / "manifest.json", manifest);
}

std::vector<mil::FeatureBag> read_bag_collection(const std::filesystem::path& root) {
    if (!std::filesystem::is_directory(root)) {
        throw DataError("bag root '" + root.string() + "' is not a directory");
    }
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "manifest.json")) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw DataError("no bag directories under '" + root.string() + "'");
    std::vector<mil::FeatureBag> bags;
    bags.reserve(dirs.size());
    for (const auto& dir : dirs) bags.push_back(read_bag(dir));
    return bags;
}

void write_params_json(const std::filesystem::path& path, const mil::AggregatorParams& params,
                       const Provenance& provenance) {
    json j;
    j["provenance"] = provenance_json(provenance);
    j["feature_dim"] = params.feature_dim;
    j["embedding_dim"] = params.embedding_dim;
    j["region_attention"] = params.region_attention;
    j["region_projection"] = params.region_projection;
    j["slide_attention"] = params.slide_attention;
    j["slide_projection"] = params.slide_projection;
    j["head_weight"] = params.head_weight;
    j["head_bias"] = params.head_bias;
    save_json(path, j);
}

mil::AggregatorParams read_params_json(const std::filesystem::path& path) {
    const json j = load_json(path);
    mil::AggregatorParams p;
    try {
        p.feature_dim = j.at("feature_dim").get<std::size_t>();
        p.embedding_dim = j.at("embedding_dim").get<std::size_t>();
        p.region_attention = j.at("region_attention").get<std::vector<double>>();
        p.region_projection = j.at("region_projection").get<std::vector<double>>();
        p.slide_attention = j.at("slide_attention").get<std::vector<double>>();
        p.slide_projection = j.at("slide_projection").get<std::vector<double>>();
        p.head_weight = j.at("head_weight").get<std::vector<double>>();
        p.head_bias = j.at("head_bias").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    p.validate();
    return p;
}

void write_tileplan_json(const std::filesystem::path& path, const tiling::TilePlan& plan,
                         std::span<const tiling::TissueCrop> crops, const Provenance& provenance) {
    json j;
    j["provenance"] = provenance_json(provenance);
    j["canvas"] = {{"width", plan.packing.canvas_width}, {"height", plan.packing.canvas_height}};
    j["region_min_coverage"] = plan.region_min_coverage;
    if (plan.tile_min_coverage) j["tile_min_coverage"] = *plan.tile_min_coverage;

    json placements = json::array();
    for (const auto& pl : plan.packing.placements) {
        placements.push_back({{"slide_id", crops[pl.crop_index].slide_id},
                              {"x", pl.x},
                              {"y", pl.y},
                              {"width", pl.width},
                              {"height", pl.height},
                              {"resize_factor", pl.resize_factor}});
    }
    j["placements"] = placements;

    json regions = json::array();
    for (const auto& region : plan.regions) {
        json tiles = json::array();
        for (const auto& tile : region.tiles) {
            tiles.push_back(
                {{"x", tile.x}, {"y", tile.y}, {"coverage", tile.coverage}, {"kept", tile.kept}});
        }
        json r = {{"x", region.x},
                  {"y", region.y},
                  {"size", tiling::kRegionPixels},
                  {"coverage", region.coverage},
                  {"resize_factor", region.resize_factor},
                  {"tiles", std::move(tiles)}};
        if (region.source_crop >= 0) {
            r["source"] = {{"slide_id", crops[static_cast<std::size_t>(region.source_crop)].slide_id},
                           {"x", region.source_x},
                           {"y", region.source_y},
                           {"size", region.source_size}};
        }
        regions.push_back(std::move(r));
    }
    j["regions"] = regions;
    save_json(path, j);
}

SlideManifest read_slide_manifest(const std::filesystem::path& path) {
    const json j = load_json(path);
    SlideManifest manifest;
    try {
        manifest.patient_id = j.at("patient_id").get<std::string>();
        for (const auto& slide : j.at("slides")) {
            SlideEntry entry;
            entry.id = slide.at("id").get<std::string>();
            entry.width = slide.at("width").get<std::size_t>();
            entry.height = slide.at("height").get<std::size_t>();
            entry.spacings = slide.at("spacings").get<std::vector<double>>();
            if (slide.contains("mask")) {
                entry.mask_path = path.parent_path() / slide.at("mask").get<std::string>();
            }
            manifest.slides.push_back(std::move(entry));
        }
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    if (manifest.slides.empty()) throw DataError(path.string() + ": manifest lists no slides");
    return manifest;
}

interpret::AttentionStack read_attention_stack(const std::filesystem::path& path) {
    const json j = load_json(path);
    interpret::AttentionStack stack;
    try {
        stack.gamma = j.value("gamma", 1.0);
        for (const auto& t : j.at("transformers")) {
            interpret::AttentionRaster raster;
            raster.frozen = t.value("frozen", false);
            if (t.contains("pgm")) {
                const auto img =
                    raster::read_pgm(path.parent_path() / t.at("pgm").get<std::string>());
                raster.width = img.width;
                raster.height = img.height;
                raster.values.reserve(img.pixels.size());
                for (auto px : img.pixels) raster.values.push_back(px / 255.0);
            } else {
                raster.width = t.at("width").get<std::size_t>();
                raster.height = t.at("height").get<std::size_t>();
                raster.values = t.at("values").get<std::vector<double>>();
            }
            stack.transformers.push_back(std::move(raster));
        }
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return stack;
}

}  // namespace bcrisk::io
