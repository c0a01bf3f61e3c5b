#include "trackmill/manifest.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>
#include <map>
#include <set>

namespace trackmill {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr char kSidecarMagic[8] = {'T', 'M', 'E', 'M', 'B', '0', '0', '1'};
constexpr int kManifestVersion = 1;

std::string sidecar_path(const std::string& path) { return path + ".emb"; }

void write_sidecar(const std::string& path, const std::vector<const FrameRecord*>& frames, int dim) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot open sidecar for writing: " + path);
    out.write(kSidecarMagic, 8);
    std::uint32_t rows = static_cast<std::uint32_t>(frames.size());
    std::uint32_t cols = static_cast<std::uint32_t>(dim);
    out.write(reinterpret_cast<const char*>(&rows), 4);
    out.write(reinterpret_cast<const char*>(&cols), 4);
    for (const auto* f : frames)
        out.write(reinterpret_cast<const char*>(f->embedding->data()),
                  static_cast<std::streamsize>(dim * sizeof(float)));
    if (!out) fail(ErrorKind::io, "write failure on sidecar: " + path);
}

std::vector<std::vector<float>> read_sidecar(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open sidecar: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kSidecarMagic, 8) != 0)
        fail(ErrorKind::parse, "bad sidecar magic in " + path);
    std::uint32_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), 4);
    in.read(reinterpret_cast<char*>(&cols), 4);
    std::vector<std::vector<float>> out(rows, std::vector<float>(cols));
    for (auto& row : out)
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(cols * sizeof(float)));
    if (!in) fail(ErrorKind::parse, "truncated sidecar: " + path);
    return out;
}

}  // namespace

void Dataset::validate() const {
    std::set<std::string> seen_ids;
    for (const auto& t : tracklets) {
        if (t.frames.empty())
            fail(ErrorKind::integrity, "tracklet '" + t.id + "' has no frames");
        if (!seen_ids.insert(t.id).second)
            fail(ErrorKind::integrity, "duplicate tracklet id '" + t.id + "'");
        for (std::size_t j = 0; j < t.frames.size(); ++j) {
            const auto& f = t.frames[j];
            if (f.seq != static_cast<int>(j))
                fail(ErrorKind::integrity,
                     "tracklet '" + t.id + "': seq values not dense from 0 (frame " +
                         std::to_string(j) + " has seq " + std::to_string(f.seq) + ")");
            if (f.camera_id != t.camera_id)
                fail(ErrorKind::integrity, "tracklet '" + t.id + "': mixed camera ids");
            if (!f.embedding && !f.image_ref)
                fail(ErrorKind::integrity,
                     "tracklet '" + t.id + "' frame " + std::to_string(j) +
                         ": neither embedding nor image_ref present");
            if (f.embedding && embedding_dim &&
                static_cast<int>(f.embedding->size()) != *embedding_dim)
                fail(ErrorKind::integrity, "tracklet '" + t.id + "': embedding dim mismatch");
        }
    }
}

Dataset load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open manifest: " + path);

    Dataset ds;
    std::string line;
    int lineno = 0;
    bool use_sidecar = false;
    std::vector<std::vector<float>> sidecar_rows;
    std::size_t next_row = 0;

    if (!std::getline(in, line)) return ds;  // empty file, empty dataset
    ++lineno;
    try {
        json header = json::parse(line);
        if (header.value("format", "") != "trackmill.manifest")
            fail(ErrorKind::parse, path + ":1: not a trackmill manifest header");
        if (header.value("version", 0) != kManifestVersion)
            fail(ErrorKind::parse, path + ":1: unsupported manifest version");
        if (header.contains("dim") && !header["dim"].is_null())
            ds.embedding_dim = header["dim"].get<int>();
        use_sidecar = header.value("sidecar", false);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, path + ":1: malformed header: " + e.what());
    }
    if (use_sidecar) sidecar_rows = read_sidecar(sidecar_path(path));

    // Tracklets appear in first-seen order; frames keep file order.
    std::map<std::string, std::size_t> index;
    std::set<std::pair<std::string, int>> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        FrameRecord f;
        try {
            json j = json::parse(line);
            f.tracklet_id = j.at("t").get<std::string>();
            f.seq = j.at("s").get<int>();
            if (!j.at("pid").is_null()) f.gt_pid = j["pid"].get<std::int64_t>();
            f.camera_id = j.at("cam").get<int>();
            if (!j.at("emb").is_null())
                f.embedding = j["emb"].get<std::vector<float>>();
            if (!j.at("img").is_null())
                f.image_ref = j["img"].get<std::string>();
        } catch (const json::exception& e) {
            fail(ErrorKind::parse, path + ":" + std::to_string(lineno) +
                                       ": malformed frame record: " + e.what());
        }
        if (!seen.insert({f.tracklet_id, f.seq}).second)
            fail(ErrorKind::integrity, path + ":" + std::to_string(lineno) +
                                           ": duplicate (tracklet_id, seq) = (" +
                                           f.tracklet_id + ", " + std::to_string(f.seq) + ")");
        if (use_sidecar && !f.embedding) {
            if (next_row >= sidecar_rows.size())
                fail(ErrorKind::parse, path + ": sidecar has fewer rows than frames");
            f.embedding = sidecar_rows[next_row++];
        }
        auto [it, inserted] = index.try_emplace(f.tracklet_id, ds.tracklets.size());
        if (inserted) ds.tracklets.push_back(Tracklet{f.tracklet_id, f.camera_id, {}});
        ds.tracklets[it->second].frames.push_back(std::move(f));
    }

    for (const auto& t : ds.tracklets) {
        if (!ds.embedding_dim && !t.frames.empty() && t.frames[0].embedding)
            ds.embedding_dim = static_cast<int>(t.frames[0].embedding->size());
    }
    ds.validate();
    return ds;
}

void save_manifest(const Dataset& ds, const std::string& path, EmbeddingStorage storage) {
    ds.validate();
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot open manifest for writing: " + path);

    bool sidecar = storage == EmbeddingStorage::sidecar;
    std::vector<const FrameRecord*> emb_frames;
    int dim = ds.embedding_dim.value_or(0);
    if (sidecar) {
        for (const auto& t : ds.tracklets)
            for (const auto& f : t.frames)
                if (f.embedding) {
                    if (dim == 0) dim = static_cast<int>(f.embedding->size());
                    emb_frames.push_back(&f);
                }
        if (emb_frames.empty()) sidecar = false;  // nothing to store
    }

    ordered_json header;
    header["format"] = "trackmill.manifest";
    header["version"] = kManifestVersion;
    header["sidecar"] = sidecar;
    if (ds.embedding_dim) header["dim"] = *ds.embedding_dim;
    else if (dim > 0) header["dim"] = dim;
    else header["dim"] = nullptr;
    out << header.dump() << "\n";

    for (const auto& t : ds.tracklets) {
        for (const auto& f : t.frames) {
            ordered_json j;
            j["t"] = f.tracklet_id;
            j["s"] = f.seq;
            if (f.gt_pid) j["pid"] = *f.gt_pid; else j["pid"] = nullptr;
            j["cam"] = f.camera_id;
            if (f.embedding && !sidecar) j["emb"] = *f.embedding; else j["emb"] = nullptr;
            if (f.image_ref) j["img"] = *f.image_ref; else j["img"] = nullptr;
            out << j.dump() << "\n";
        }
    }
    if (!out) fail(ErrorKind::io, "write failure on manifest: " + path);
    if (sidecar) write_sidecar(sidecar_path(path), emb_frames, dim);
}

}  // namespace trackmill
