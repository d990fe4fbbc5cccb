// Microbenchmarks for the parsing layers and the end-to-end scan.

#include <benchmark/benchmark.h>

#include <fstream>
#include <vector>

#include "apkaudit/axml.hpp"
#include "apkaudit/bytecode.hpp"
#include "apkaudit/container.hpp"
#include "apkaudit/pipeline.hpp"

namespace {

std::vector<uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in),
          std::istreambuf_iterator<char>()};
}

const std::string kFixtures = APKAUDIT_FIXTURE_DIR;

void BM_ContainerOpen(benchmark::State& state) {
  std::vector<uint8_t> bytes = slurp(kFixtures + "/worst.apk");
  for (auto _ : state) {
    auto archive = apkaudit::ZipArchive::from_bytes(bytes);
    benchmark::DoNotOptimize(archive.entries().size());
  }
}
BENCHMARK(BM_ContainerOpen);

void BM_ManifestParse(benchmark::State& state) {
  std::vector<uint8_t> bytes = slurp(kFixtures + "/worst.apk");
  auto archive = apkaudit::ZipArchive::from_bytes(bytes);
  std::vector<uint8_t> manifest = archive.read("AndroidManifest.xml");
  for (auto _ : state) {
    auto model = apkaudit::parse_binary_manifest(manifest);
    benchmark::DoNotOptimize(model.components.size());
  }
}
BENCHMARK(BM_ManifestParse);

void BM_DexParse(benchmark::State& state) {
  std::vector<uint8_t> bytes = slurp(kFixtures + "/worst.apk");
  auto archive = apkaudit::ZipArchive::from_bytes(bytes);
  std::vector<uint8_t> dex = archive.read("classes.dex");
  for (auto _ : state) {
    auto model = apkaudit::parse_dex(dex);
    benchmark::DoNotOptimize(model.classes.size());
  }
}
BENCHMARK(BM_DexParse);

void BM_FullScan(benchmark::State& state) {
  std::vector<uint8_t> bytes = slurp(kFixtures + "/worst.apk");
  for (auto _ : state) {
    auto report = apkaudit::scan_bytes(bytes, "worst.apk");
    benchmark::DoNotOptimize(report.findings.size());
  }
}
BENCHMARK(BM_FullScan);

}  // namespace

BENCHMARK_MAIN();
