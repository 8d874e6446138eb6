#pragma once

#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "solar/types.hpp"

namespace solar::jsonl {

// Streams a JSONL file line by line. Blank lines are rejected; a malformed
// line raises a Data error carrying the 1-based line number.
void for_each_line(const std::string& path,
                   const std::function<void(size_t line_number,
                                            const nlohmann::json& object)>& fn);

// Line-oriented writer using insertion-ordered objects so output bytes are a
// pure function of the records.
class Writer {
public:
  explicit Writer(const std::string& path);
  ~Writer();
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  void write(const nlohmann::ordered_json& object);
  void close();

private:
  std::string path_;
  std::ofstream out_;
};

nlohmann::ordered_json problem_to_json(const Problem& problem);
Problem problem_from_json(const nlohmann::json& object);

nlohmann::ordered_json response_to_json(const ResponseRecord& record);
ResponseRecord response_from_json(const nlohmann::json& object);

nlohmann::ordered_json annotation_to_json(const TopoAnnotation& annotation);
TopoAnnotation annotation_from_json(const nlohmann::json& object);

// Readers validate per-record invariants and id uniqueness within the file.
std::vector<Problem> read_problems(const std::string& path);
std::vector<ResponseRecord> read_responses(const std::string& path);
std::vector<TopoAnnotation> read_annotations(const std::string& path);

void write_problems(const std::string& path, std::span<const Problem> problems);
void write_responses(const std::string& path,
                     std::span<const ResponseRecord> records);
void write_annotations(const std::string& path,
                       std::span<const TopoAnnotation> annotations);

}  // namespace solar::jsonl
