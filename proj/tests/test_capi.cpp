#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "jdfem/jdfem.h"

namespace {

std::string take(jdfem_string* s) {
  std::string out(jdfem_string_data(s), jdfem_string_size(s));
  jdfem_string_free(s);
  return out;
}

std::filesystem::path temp_dir(const char* name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

jdfem_config* small_config() {
  jdfem_config* c = nullptr;
  EXPECT_EQ(jdfem_config_parse("[levels]\ncount = 2\nreference = 3\n[sampling]\nsamples = 2\nmax_samples = 2\n", &c),
            JDFEM_OK);
  return c;
}

}  // namespace

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(jdfem_version(), "0.1.0");
  EXPECT_STREQ(jdfem_status_name(JDFEM_OK), "ok");
  EXPECT_STRNE(jdfem_status_name(JDFEM_ERR_CONFIG), "ok");
}

TEST(CApi, ScalarHelpers) {
  double v = 0.0;
  ASSERT_EQ(jdfem_matern32(1.0, 1.0, 1.0, &v), JDFEM_OK);
  EXPECT_NEAR(v, 0.48335772459650765, 1e-15);
  ASSERT_EQ(jdfem_tail_probability(0, 1.0, 0.0, 8.0, 1.0, &v), JDFEM_OK);
  EXPECT_NEAR(v, 1.1252e-6, 5e-11);
  double ew = 0.0;
  double el = 0.0;
  ASSERT_EQ(jdfem_equilibrate(0.1, 1.0, 1.0, 2.01, &ew, &el), JDFEM_OK);
  EXPECT_NEAR(el, 0.009772372209558107, 1e-15);
  EXPECT_EQ(jdfem_matern32(1.0, 1.0, -1.0, &v), JDFEM_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(jdfem_last_error()), "");
  EXPECT_EQ(jdfem_tail_probability(3, 1.0, 0.0, 8.0, 1.0, &v), JDFEM_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(jdfem_matern32(1.0, 1.0, 1.0, nullptr), JDFEM_ERR_INVALID_ARGUMENT);
}

TEST(CApi, ConfigErrorsCarryKey) {
  jdfem_config* c = nullptr;
  EXPECT_EQ(jdfem_config_parse("[fields]\nsigma1 = -2\n", &c), JDFEM_ERR_CONFIG);
  EXPECT_STREQ(jdfem_last_error_key(), "fields.sigma1");
  EXPECT_EQ(c, nullptr);
  EXPECT_EQ(jdfem_config_parse("[fields]\nbogus = 1\n", &c), JDFEM_ERR_CONFIG);
  EXPECT_STREQ(jdfem_last_error_key(), "fields.bogus");
  EXPECT_EQ(jdfem_config_load("/nonexistent.ini", &c), JDFEM_ERR_IO);
}

TEST(CApi, ConfigSetGetEcho) {
  jdfem_config* c = nullptr;
  ASSERT_EQ(jdfem_config_default(&c), JDFEM_OK);
  ASSERT_EQ(jdfem_config_set(c, "fields.sigma1", "0.75"), JDFEM_OK);
  jdfem_string* s = nullptr;
  ASSERT_EQ(jdfem_config_get(c, "fields.sigma1", &s), JDFEM_OK);
  EXPECT_EQ(take(s), "0.75");
  ASSERT_EQ(jdfem_config_echo(c, &s), JDFEM_OK);
  const std::string echo = take(s);
  jdfem_config* back = nullptr;
  ASSERT_EQ(jdfem_config_parse(echo.c_str(), &back), JDFEM_OK);
  ASSERT_EQ(jdfem_config_echo(back, &s), JDFEM_OK);
  EXPECT_EQ(take(s), echo);
  EXPECT_EQ(jdfem_config_set(c, "fields.nope", "1"), JDFEM_ERR_CONFIG);
  ASSERT_EQ(jdfem_config_set(c, "levels.reference", "1"), JDFEM_OK);
  EXPECT_EQ(jdfem_config_validate(c), JDFEM_ERR_CONFIG);
  jdfem_config_free(c);
  jdfem_config_free(back);
}

TEST(CApi, SampleDumps) {
  jdfem_config* c = small_config();
  const auto dir = temp_dir("jdfem_capi_dump");
  const jdfem_sample_spec spec{3, 1, JDFEM_MESH_ADAPTED};
  EXPECT_EQ(jdfem_write_field(c, &spec, 1, JDFEM_FORMAT_BINARY, (dir / "w1.bin").c_str()), JDFEM_OK);
  EXPECT_EQ(jdfem_write_field(c, &spec, 3, JDFEM_FORMAT_BINARY, (dir / "w3.bin").c_str()),
            JDFEM_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(jdfem_write_paths(c, &spec, (dir / "l1.csv").c_str(), (dir / "l2.csv").c_str()), JDFEM_OK);
  EXPECT_EQ(jdfem_write_coefficient(c, &spec, JDFEM_FORMAT_CSV, 16, (dir / "a.csv").c_str(),
                                    (dir / "a.json").c_str()),
            JDFEM_OK);
  EXPECT_EQ(jdfem_write_solution(c, &spec, JDFEM_FORMAT_BINARY, 16, (dir / "u.bin").c_str(),
                                 (dir / "mesh.txt").c_str(), nullptr),
            JDFEM_OK);
  // 8 header words plus 16 x 16 doubles.
  EXPECT_EQ(std::filesystem::file_size(dir / "u.bin"), 8u * (8 + 256));
  EXPECT_TRUE(std::filesystem::exists(dir / "mesh.txt"));
  std::ifstream meta(dir / "a.json");
  const std::string text((std::istreambuf_iterator<char>(meta)), {});
  EXPECT_NE(text.find("\"seed\""), std::string::npos);
  EXPECT_EQ(jdfem_write_field(c, &spec, 1, JDFEM_FORMAT_BINARY, "/nonexistent/dir/w.bin"), JDFEM_ERR_IO);
  const jdfem_sample_spec bad{0, 9, JDFEM_MESH_ADAPTED};
  EXPECT_NE(jdfem_write_field(c, &bad, 1, JDFEM_FORMAT_BINARY, (dir / "x.bin").c_str()), JDFEM_OK);
  jdfem_config_free(c);
}

TEST(CApi, ExperimentAndReport) {
  jdfem_config* c = small_config();
  int lines = 0;
  jdfem_report* r = nullptr;
  ASSERT_EQ(jdfem_run_experiment(c, 1, [](const char*, void* u) { ++*static_cast<int*>(u); }, &lines, &r),
            JDFEM_OK);
  EXPECT_GT(lines, 0);
  ASSERT_EQ(jdfem_report_arm_count(r), 2u);
  EXPECT_STREQ(jdfem_report_arm_name(r, 0), "adapted");
  EXPECT_EQ(jdfem_report_arm_name(r, 5), nullptr);
  double sh = 0.0;
  double sd = 0.0;
  EXPECT_EQ(jdfem_report_rate(r, 0, &sh, &sd), JDFEM_OK);
  EXPECT_TRUE(std::isfinite(sh));
  jdfem_string* s = nullptr;
  ASSERT_EQ(jdfem_report_level_csv(r, 1, &s), JDFEM_OK);
  EXPECT_EQ(take(s).rfind("# master_seed=1 arm=standard\n", 0), 0u);
  ASSERT_EQ(jdfem_report_json(r, &s), JDFEM_OK);
  const std::string json = take(s);
  jdfem_report* back = nullptr;
  ASSERT_EQ(jdfem_report_from_json(json.c_str(), &back), JDFEM_OK);
  ASSERT_EQ(jdfem_report_json(back, &s), JDFEM_OK);
  EXPECT_EQ(take(s), json);
  ASSERT_EQ(jdfem_report_render(back, JDFEM_PLOT_ERROR_VS_DOFS, &s), JDFEM_OK);
  EXPECT_EQ(take(s).rfind("<svg", 0), 0u);
  EXPECT_EQ(jdfem_report_from_json("{not json", &back), JDFEM_ERR_INVALID_ARGUMENT);
  jdfem_report_free(r);
  jdfem_report_free(back);
  jdfem_config_free(c);
}
