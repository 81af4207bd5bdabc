#include "chiploop/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>

#include "chiploop/error.hpp"

namespace chiploop {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::backend_unreachable: return "BackendUnreachable";
    case ErrorCode::backend_refused: return "BackendRefused";
    case ErrorCode::mock_exhausted: return "MockExhausted";
    case ErrorCode::fixture_malformed: return "FixtureMalformed";
    case ErrorCode::partial_batch: return "PartialBatch";
    case ErrorCode::empty_spec: return "EmptySpec";
    case ErrorCode::empty_pseudocode: return "EmptyPseudocode";
    case ErrorCode::empty_pool: return "EmptyPool";
    case ErrorCode::no_code_found: return "NoCodeFound";
    case ErrorCode::tool_missing: return "ToolMissing";
    case ErrorCode::no_testcases: return "NoTestcases";
    case ErrorCode::score_unparsable: return "ScoreUnparsable";
    case ErrorCode::unevaluated_child: return "UnevaluatedChild";
    case ErrorCode::all_extraction_failed: return "AllExtractionFailed";
    case ErrorCode::template_error: return "TemplateError";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                             &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw Error(ErrorCode::io_error, "sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0f]);
  }
  return out;
}

}  // namespace chiploop
