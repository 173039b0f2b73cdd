#include "gdm/harness.hpp"
#include "gdm/text.hpp"

// After the Eigen headers: resolv.h, pulled in here, defines a `_res` macro.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace gdm {

std::string sha256_hex(std::string_view bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
        throw std::runtime_error("sha256 computation failed");
    }
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

namespace {

std::string download(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::runtime_error("url '" + url + "' has no scheme");
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(15);
    client.set_read_timeout(60);
    const auto res = client.Get(path);
    if (!res) throw std::runtime_error("download failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw std::runtime_error("download failed: HTTP " + std::to_string(res->status));
    return res->body;
}

}  // namespace

FetchOutcome fetch_dataset(const DatasetManifest& manifest, bool verify_only) {
    FetchOutcome out;
    out.dataset = manifest.name;
    try {
        std::error_code ec;
        const bool present = std::filesystem::is_regular_file(manifest.path, ec);
        if (!present) {
            if (verify_only) {
                out.message = "missing " + manifest.path.string();
                return out;
            }
            if (manifest.url.empty()) {
                out.message = "missing " + manifest.path.string() + " and the manifest has no url";
                return out;
            }
            const auto body = download(manifest.url);
            if (!manifest.sha256.empty() && sha256_hex(body) != text::to_lower(manifest.sha256)) {
                out.message = "downloaded file from " + manifest.url + " does not match the manifest checksum";
                return out;
            }
            std::filesystem::create_directories(manifest.path.parent_path());
            std::ofstream file(manifest.path, std::ios::binary);
            file << body;
            if (!file) {
                out.message = "cannot write " + manifest.path.string();
                return out;
            }
            out.ok = true;
            out.message = "downloaded " + manifest.path.string();
            return out;
        }
        if (manifest.sha256.empty()) {
            out.ok = true;
            out.message = "present; manifest has no checksum";
            return out;
        }
        const auto actual = sha256_file(manifest.path);
        out.ok = actual == text::to_lower(manifest.sha256);
        out.message = out.ok ? "checksum ok" : "checksum mismatch: " + actual;
    } catch (const std::exception& e) {
        out.message = e.what();
    }
    return out;
}

}  // namespace gdm
