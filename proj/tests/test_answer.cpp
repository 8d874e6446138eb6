#include <doctest.h>

#include <random>
#include <string>

#include "solar/answer.hpp"

using solar::canonicalize_answer;
using solar::extract_final_answer;

TEST_CASE("canonicalize trims, lowercases and strips punctuation") {
  CHECK(canonicalize_answer("  42. ") == "42");
  CHECK(canonicalize_answer("Yes.") == "yes");
  CHECK(canonicalize_answer("A  B\tC") == "a b c");
  CHECK(canonicalize_answer("$15") == "15");
  CHECK(canonicalize_answer("$ 3.50 ") == "3.5");
  CHECK(canonicalize_answer("") == "");
  CHECK(canonicalize_answer("   ") == "");
}

TEST_CASE("canonicalize normalizes numeric forms") {
  CHECK(canonicalize_answer("1,000") == "1000");
  CHECK(canonicalize_answer("1,234,567") == "1234567");
  CHECK(canonicalize_answer("+7") == "7");
  CHECK(canonicalize_answer("007") == "7");
  CHECK(canonicalize_answer("2.50") == "2.5");
  CHECK(canonicalize_answer("2.0") == "2");
  CHECK(canonicalize_answer(".5") == "0.5");
  CHECK(canonicalize_answer("-0") == "0");
  CHECK(canonicalize_answer("-0.0") == "0");
  CHECK(canonicalize_answer("-12") == "-12");
}

TEST_CASE("canonicalize leaves non-numeric content intact beyond case and spacing") {
  CHECK(canonicalize_answer("\\frac{1}{2}") == "\\frac{1}{2}");
  CHECK(canonicalize_answer("3/4") == "3/4");
  CHECK(canonicalize_answer("x = 9") == "x = 9");
  // Invalid grouping is not a number; it only gets the text treatment.
  CHECK(canonicalize_answer("1,00") == "1,00");
}

TEST_CASE("canonicalize is idempotent on random inputs") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> len(0, 24);
  const std::string alphabet = "aZ0 9.,$+-\t\\{}/";
  std::uniform_int_distribution<size_t> pick(0, alphabet.size() - 1);
  for (int i = 0; i < 500; ++i) {
    std::string raw;
    int n = len(rng);
    for (int j = 0; j < n; ++j) raw.push_back(alphabet[pick(rng)]);
    std::string once = canonicalize_answer(raw);
    CHECK(canonicalize_answer(once) == once);
  }
}

TEST_CASE("extraction prefers the hash marker") {
  CHECK(extract_final_answer("...so x=9.\n#### 72") == "72");
  CHECK(extract_final_answer("#### 8\nmore text\n#### 9\ntail") == "9");
  CHECK(extract_final_answer("noise\n#### 1,000") == "1000");
  // The marker outranks a final-answer line:
  CHECK(extract_final_answer("#### 9\nFinal Answer: 8") == "9");
  // Only the marker's own line is taken.
  CHECK(extract_final_answer("#### 42 apples\nrest") == "42 apples");
}

TEST_CASE("extraction falls back to the final-answer line") {
  CHECK(extract_final_answer("Final Answer: 3/4") == "3/4");
  CHECK(extract_final_answer("steps...\nFINAL ANSWER: 42") == "42");
  CHECK(extract_final_answer("a\nfinal answer:  $12.50 \nb") == "12.5");
}

TEST_CASE("extraction falls back to the last numeric token") {
  CHECK(extract_final_answer("we get 5 then 7 done") == "7");
  CHECK(extract_final_answer("a 1,234.5 b") == "1234.5");
  CHECK(extract_final_answer("values 1,234.5 and 6") == "6");
  CHECK(extract_final_answer("temperature was -4 overnight") == "-4");
  CHECK(extract_final_answer("no numbers here at all") == "");
}

TEST_CASE("extraction result is canonical") {
  CHECK(extract_final_answer("#### +0,") == "0");
  std::string out = extract_final_answer("Final Answer:  Mixed  CASE  text ");
  CHECK(out == canonicalize_answer(out));
}
