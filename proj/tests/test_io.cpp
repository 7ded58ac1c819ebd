#include <gtest/gtest.h>

#include <cstring>
#include <json.hpp>
#include <limits>

#include "saesim/errors.hpp"
#include "saesim/io.hpp"
#include "support.hpp"

using namespace saesim;

namespace {

// Hand-built NPY image: magic, v1.0, padded header, little-endian payload.
std::string npy_image(const std::string& dict, const std::string& payload) {
  std::string header = dict;
  const std::size_t prefix = 10;
  while ((prefix + header.size() + 1) % 64 != 0) header.push_back(' ');
  header.push_back('\n');
  std::string out("\x93NUMPY\x01\x00", 8);
  out.push_back(static_cast<char>(header.size() & 0xff));
  out.push_back(static_cast<char>(header.size() >> 8));
  return out + header + payload;
}

template <typename T>
std::string le_bytes(std::initializer_list<T> values) {
  std::string out;
  for (T v : values) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
  }
  return out;
}

}  // namespace

TEST(Npy, Float32TwoByThree) {
  const auto img = npy_image("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3), }",
                             le_bytes<float>({1.5f, -2.f, 0.f, 3.25f, 4.f, 5.f}));
  const Matrix m = io::parse_npy(img);
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 3);
  EXPECT_EQ(m(0, 0), 1.5);
  EXPECT_EQ(m(0, 1), -2.0);
  EXPECT_EQ(m(1, 0), 3.25);
  EXPECT_EQ(m(1, 2), 5.0);
}

TEST(Npy, Float64RoundTrip) {
  const Matrix m = test::gaussian(5, 7, 3);
  EXPECT_EQ(io::parse_npy(io::encode_npy(m)), m);
  const Matrix f = io::parse_npy(io::encode_npy(m, io::DType::f32));
  EXPECT_LT((f - m).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Npy, NanReportsPosition) {
  const float nan = std::numeric_limits<float>::quiet_NaN();
  const auto img = npy_image("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2), }",
                             le_bytes<float>({1.f, 2.f, nan, 4.f}));
  try {
    io::parse_npy(img);
    FAIL() << "NaN accepted";
  } catch (const NonFiniteEntry& e) {
    EXPECT_EQ(e.row(), 1);
    EXPECT_EQ(e.col(), 0);
  }
}

TEST(Npy, RejectsBadMagicWithOffset) {
  auto img = npy_image("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 1), }", le_bytes<double>({1.0}));
  img[1] = 'X';
  try {
    io::parse_npy(img);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.location(), FormatError::Location::byte_offset);
    EXPECT_LE(e.offset(), 6u);
  }
}

TEST(Npy, RejectsFortranOrderAndRank3) {
  const auto fortran = npy_image("{'descr': '<f8', 'fortran_order': True, 'shape': (1, 1), }",
                                 le_bytes<double>({1.0}));
  EXPECT_THROW(io::parse_npy(fortran), FormatError);
  const auto rank3 = npy_image("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 1, 1), }",
                               le_bytes<double>({1.0}));
  EXPECT_THROW(io::parse_npy(rank3), FormatError);
  const auto truncated = npy_image("{'descr': '<f8', 'fortran_order': False, 'shape': (2, 2), }",
                                   le_bytes<double>({1.0, 2.0}));
  EXPECT_THROW(io::parse_npy(truncated), FormatError);
  const auto big_endian = npy_image("{'descr': '>f8', 'fortran_order': False, 'shape': (1, 1), }",
                                    le_bytes<double>({1.0}));
  EXPECT_THROW(io::parse_npy(big_endian), FormatError);
}

TEST(Csv, ParsesRowsAndReportsLine) {
  const Matrix m = io::parse_csv("1.0,2.0\n3.0,4.0");
  Matrix want(2, 2);
  want << 1, 2, 3, 4;
  EXPECT_EQ(m, want);
  try {
    io::parse_csv("1,2\n3\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.location(), FormatError::Location::line);
    EXPECT_EQ(e.offset(), 2u);
  }
  EXPECT_THROW(io::parse_csv("1,abc\n"), FormatError);
  EXPECT_THROW(io::parse_csv("1,nan\n"), InputError);
}

TEST(TokenTableIo, ParsesJsonLines) {
  const auto t = io::parse_token_table("\"the\"\n\"\\n\"\n\"<bos>\"\n");
  EXPECT_EQ(t.tokens(), (std::vector<std::string>{"the", "\n", "<bos>"}));
  EXPECT_EQ(io::parse_token_table("").size(), 0);
  try {
    io::parse_token_table("\"a\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.location(), FormatError::Location::line);
    EXPECT_EQ(e.offset(), 1u);
  }
  EXPECT_THROW(io::parse_token_table("\"a\"\n3\n"), FormatError);
}

TEST(TokenTableIo, FileRoundTrip) {
  const auto dir = test::scratch_dir("tokens");
  const TokenTable t({"the", "\n", "", " Rage", "caf\xc3\xa9", "\"quoted\""});
  io::save_token_table(dir / "t.jsonl", t);
  EXPECT_EQ(io::load_token_table(dir / "t.jsonl"), t);
}

TEST(Lexicon, DefaultHasEightCategories) {
  const auto lex = io::default_lexicon();
  EXPECT_EQ(lex.categories().size(), 8u);
  const auto& emo = lex.at("Emotions").keywords;
  for (const char* kw : {"joy", "glee", "pride", "grief", "fear"}) {
    EXPECT_NE(std::find(emo.begin(), emo.end(), kw), emo.end()) << kw;
  }
  // Keywords are stored lowercased.
  const auto& months = lex.at("MonthNames").keywords;
  EXPECT_NE(std::find(months.begin(), months.end(), "january"), months.end());
}

TEST(Lexicon, ParseRules) {
  const auto lex = io::parse_lexicon("# c\n\nEmotions = Joy, joy , fear\nEmpty =\n");
  EXPECT_EQ(lex.at("Emotions").keywords, (std::vector<std::string>{"joy", "fear"}));
  EXPECT_TRUE(lex.at("Empty").keywords.empty());
  EXPECT_THROW(io::parse_lexicon("Emotions = joy\nEmotions = fear\n"), DuplicateCategory);
  EXPECT_THROW(io::parse_lexicon("Emotions joy\n"), FormatError);
  EXPECT_THROW(io::parse_lexicon("Emotions = joy,,fear\n"), FormatError);
  EXPECT_THROW(io::parse_lexicon("Punct = ., joy\n"), InputError);
  EXPECT_EQ(io::parse_lexicon(io::format_lexicon(lex)), lex);
}

TEST(Reports, JsonKeysAndStableBytes) {
  ScoreReport r;
  r.metric = Metric::svcca;
  r.paired_score = 0.912345678;
  r.null_mean = 0.3;
  r.null_samples = 100;
  r.p_value = 0.0;
  r.n_pairs = 42;
  r.filters_applied = {"nonconcept", "one_to_one"};
  r.seed = 7;
  r.stage_counts = {{"argmax", 50}, {"one_to_one", 42}};
  r.params = {{"variance_retained", "0.99"}};
  r.tool_version = "1.0.0";
  const auto text = io::format_report(r, io::ReportFormat::json);
  const auto j = nlohmann::json::parse(text);
  for (const char* key : {"metric", "paired_score", "null_mean", "null_samples", "p_value", "n_pairs",
                          "filters_applied", "seed", "rng", "stage_counts", "params", "tool_version",
                          "config_hash"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["paired_score"].get<double>(), 0.912346);
  EXPECT_EQ(j["rng"], "mt19937_64");

  const auto dir = test::scratch_dir("reports");
  io::write_report(r, dir / "a.json", io::ReportFormat::json);
  io::write_report(r, dir / "b.json", io::ReportFormat::json);
  EXPECT_EQ(io::read_file(dir / "a.json"), io::read_file(dir / "b.json"));
  EXPECT_EQ(io::read_file(dir / "a.json"), text);
}

TEST(Reports, CsvRows) {
  ScoreReport r;
  r.metric = Metric::rsa;
  r.null_samples = 10;
  r.filters_applied = {"one_to_one"};
  const auto csv = io::format_report(r, io::ReportFormat::csv);
  EXPECT_EQ(csv.rfind("metric,paired_score,", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);

  std::vector<io::SweepRow> rows(2);
  rows[0].layer_a = 0;
  rows[0].layer_b = 1;
  rows[0].report = r;
  rows[1].layer_a = 1;
  rows[1].layer_b = 1;
  rows[1].report.metric = Metric::rsa;
  rows[1].status = "TooFewPairs: 1 pairs, need at least 3";
  const auto sweep = io::format_sweep(rows, io::ReportFormat::csv);
  EXPECT_NE(sweep.find("\n0,1,rsa,"), std::string::npos);
  EXPECT_NE(sweep.find(",ok\n"), std::string::npos);
  EXPECT_NE(sweep.find("TooFewPairs"), std::string::npos);
  const auto json = nlohmann::json::parse(io::format_sweep(rows, io::ReportFormat::json));
  ASSERT_EQ(json.size(), 2u);
  EXPECT_EQ(json[0]["status"], "ok");
  EXPECT_EQ(json[1]["layer_a"], 1);
}

TEST(Reports, NumberFormat) {
  EXPECT_EQ(io::format_number(0.0), "0");
  EXPECT_EQ(io::format_number(-0.0), "0");
  EXPECT_EQ(io::format_number(0.1234567), "0.123457");
  EXPECT_EQ(io::format_number(1e-10), "1e-10");
}

TEST(MatrixFiles, LoadByExtension) {
  const auto dir = test::scratch_dir("matrix");
  const Matrix m = test::gaussian(3, 4, 9);
  io::save_npy(dir / "m.npy", m);
  EXPECT_EQ(io::load_matrix(dir / "m.npy"), m);
  io::write_file(dir / "m.csv", "1,2\n3,4\n");
  EXPECT_EQ(io::load_matrix(dir / "m.csv").rows(), 2);
  EXPECT_THROW(io::load_matrix(dir / "missing.npy"), InputError);
}
