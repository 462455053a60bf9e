// Exercises the shared library through its C header only.
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <set>
#include <vector>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "torsionscope/torsionscope.h"

namespace {

std::string tmp(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

std::string take(char* s) {
  std::string out = s ? s : "";
  ts_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("version and errors") {
  CHECK(std::string(ts_version()) == "1.0.0");
  CHECK(std::string(ts_status_name(TS_CAPACITY_EXCEEDED)) == "capacity exceeded");
  ts_cloud* c = nullptr;
  CHECK(ts_generate_band(2, 1, 600, 1.5, 7, &c) == TS_INVALID_ARGUMENT);
  CHECK(c == nullptr);
  CHECK(std::strlen(ts_last_error()) > 0);
  CHECK(ts_generate_rp2(10, 4, 1, &c) == TS_PRECONDITION);
  CHECK(ts_cloud_read(tmp("missing_cloud.csv").c_str(), &c) == TS_IO);
  CHECK(ts_generate_band(2, 1, 60, 0.2, 7, nullptr) == TS_INVALID_ARGUMENT);
}

TEST_CASE("clouds, filtrations and diagrams") {
  ts_cloud* c = nullptr;
  REQUIRE(ts_generate_band(1, 0, 60, 0.2, 3, &c) == TS_OK);
  CHECK(ts_cloud_size(c) == 60);
  CHECK(ts_cloud_dim(c) == 3);

  ts_cloud* p = nullptr;
  double mse = -1;
  const size_t idx[] = {0, 1};
  REQUIRE(ts_perturb(c, idx, 2, 0.0, 1, &p, &mse) == TS_OK);
  CHECK(mse == 0.0);
  CHECK(std::memcmp(ts_cloud_data(c), ts_cloud_data(p), 60 * 3 * sizeof(double)) == 0);
  ts_cloud_free(p);

  REQUIRE(ts_cloud_write(c, tmp("ts_capi.csv").c_str()) == TS_OK);
  ts_cloud* back = nullptr;
  REQUIRE(ts_cloud_read(tmp("ts_capi.csv").c_str(), &back) == TS_OK);
  CHECK(std::memcmp(ts_cloud_data(c), ts_cloud_data(back), 60 * 3 * sizeof(double)) == 0);
  ts_cloud_free(back);

  ts_filtration* f = nullptr;
  REQUIRE(ts_rips(c, 2, -1.0, 0, &f) == TS_OK);
  CHECK(ts_filtration_max_dim(f) == 2);
  CHECK(ts_rips(c, 2, -1.0, 10, &f) == TS_CAPACITY_EXCEEDED);

  ts_diagram *d2 = nullptr, *d3 = nullptr;
  REQUIRE(ts_diagram_compute(f, "q2", 1, &d2) == TS_OK);
  REQUIRE(ts_diagram_compute(f, "q3", 1, &d3) == TS_OK);
  CHECK(ts_diagram_compute(f, "q4", 1, &d3) == TS_INVALID_ARGUMENT);
  double dist = -1;
  REQUIRE(ts_diagram_distance(d2, d3, 1, TS_BOTTLENECK, TS_INF_EXCLUDE, 0, &dist) == TS_OK);
  CHECK(dist == 0.0);
  REQUIRE(ts_diagram_distance(d2, d3, 0, TS_WASSERSTEIN1, TS_INF_MATCH, 0, &dist) == TS_OK);
  CHECK(dist == 0.0);

  REQUIRE(ts_diagram_write(d2, tmp("ts_capi_dgm.json").c_str()) == TS_OK);
  ts_diagram* rd = nullptr;
  REQUIRE(ts_diagram_read(tmp("ts_capi_dgm.json").c_str(), &rd) == TS_OK);
  char *j1 = nullptr, *j2 = nullptr;
  REQUIRE(ts_diagram_json(d2, &j1) == TS_OK);
  REQUIRE(ts_diagram_json(rd, &j2) == TS_OK);
  CHECK(take(j1) == take(j2));
  ts_diagram_free(rd);

  char* ej = nullptr;
  REQUIRE(ts_entropy_json(d2, 1, 0.5, 0, &ej) == TS_OK);
  const auto ent = nlohmann::json::parse(take(ej));
  CHECK(ent.contains("entropy"));

  char* tj = nullptr;
  const uint32_t primes[] = {2, 3, 5};
  REQUIRE(ts_torsion_check_json(f, primes, 3, 1, 0, &tj) == TS_OK);
  CHECK(nlohmann::json::parse(take(tj))["has_torsion"] == false);

  REQUIRE(ts_filtration_write(f, tmp("ts_capi.filt").c_str()) == TS_OK);
  ts_filtration* rf = nullptr;
  REQUIRE(ts_filtration_read(tmp("ts_capi.filt").c_str(), &rf) == TS_OK);
  CHECK(ts_filtration_size(rf) == ts_filtration_size(f));
  ts_filtration_free(rf);

  ts_diagram_free(d2);
  ts_diagram_free(d3);
  ts_filtration_free(f);
  ts_cloud_free(c);
}

TEST_CASE("homology of a dumped triangulation") {
  // 6-vertex projective plane as a filtration dump, everything born at 0
  const int tri[10][3] = {{0, 1, 3}, {0, 1, 5}, {0, 2, 4}, {0, 2, 5}, {0, 3, 4},
                          {1, 2, 3}, {1, 2, 4}, {1, 4, 5}, {2, 3, 5}, {3, 4, 5}};
  std::set<std::vector<int>> faces;
  for (const auto& t : tri) {
    faces.insert({t[0], t[1], t[2]});
    faces.insert({t[0], t[1]});
    faces.insert({t[0], t[2]});
    faces.insert({t[1], t[2]});
    for (int v : t) faces.insert({v});
  }
  std::string text;
  for (int dim = 0; dim <= 2; ++dim)
    for (const auto& s : faces)
      if (int(s.size()) == dim + 1) {
        text += "0 " + std::to_string(dim);
        for (int v : s) text += " " + std::to_string(v);
        text += "\n";
      }
  {
    std::FILE* out = std::fopen(tmp("ts_rp2.filt").c_str(), "w");
    std::fputs(text.c_str(), out);
    std::fclose(out);
  }
  ts_filtration* f = nullptr;
  REQUIRE(ts_filtration_read(tmp("ts_rp2.filt").c_str(), &f) == TS_OK);
  char* hj = nullptr;
  REQUIRE(ts_homology_json(f, 0, ts_filtration_size(f), 2, &hj) == TS_OK);
  const auto h = nlohmann::json::parse(take(hj));
  CHECK(h.dump().find("Z/2") != std::string::npos);
  char* oj = nullptr;
  const uint32_t primes[] = {2, 3};
  REQUIRE(ts_torsion_check_json(f, primes, 2, 2, 1, &oj) == TS_OK);
  const auto o = nlohmann::json::parse(take(oj));
  CHECK(o["has_torsion"] == true);
  ts_filtration_free(f);
}

TEST_CASE("training through the C API") {
  ts_cloud* c = nullptr;
  REQUIRE(ts_generate_band(2, 1, 64, 0.2, 7, &c) == TS_OK);
  const char* opts = R"({"arch":[3,8,2,8,3],"loss":"topo","weight":0.5,"seed":3,
                         "train":{"epochs":2,"batch_size":16,"eval_batch_size":32}})";
  int lines = 0;
  ts_model* m = nullptr;
  char* hist = nullptr;
  REQUIRE(ts_train(c, opts, [](const char*, void* u) { ++*static_cast<int*>(u); }, &lines, &m, &hist) == TS_OK);
  CHECK(lines == 2);
  const auto h = nlohmann::json::parse(take(hist));
  CHECK(h.size() == 2);
  ts_cloud *rec = nullptr, *lat = nullptr;
  REQUIRE(ts_model_apply(m, c, &rec, &lat) == TS_OK);
  CHECK(ts_cloud_dim(lat) == 2);
  CHECK(ts_cloud_size(rec) == 64);
  REQUIRE(ts_model_write(m, tmp("ts_model.json").c_str()) == TS_OK);
  ts_model* m2 = nullptr;
  REQUIRE(ts_model_read(tmp("ts_model.json").c_str(), &m2) == TS_OK);
  ts_cloud *rec2 = nullptr, *lat2 = nullptr;
  REQUIRE(ts_model_apply(m2, c, &rec2, &lat2) == TS_OK);
  CHECK(std::memcmp(ts_cloud_data(rec), ts_cloud_data(rec2), 64 * 3 * sizeof(double)) == 0);
  CHECK(ts_train(c, "{not json", nullptr, nullptr, &m2, nullptr) == TS_INVALID_ARGUMENT);
  for (auto* x : {rec, lat, rec2, lat2, c}) ts_cloud_free(x);
  ts_model_free(m);
  ts_model_free(m2);
}

TEST_CASE("preset names") {
  int count = 0;
  for (const char* p = ts_preset_names(); *p; p += std::strlen(p) + 1) ++count;
  CHECK(count == 7);
  char* rep = nullptr;
  CHECK(ts_experiment("nope", "ci", tmp("ts_x").c_str(), nullptr, nullptr, &rep) == TS_INVALID_ARGUMENT);
  CHECK(ts_experiment("fragility", "huge", tmp("ts_x").c_str(), nullptr, nullptr, &rep) == TS_INVALID_ARGUMENT);
}
