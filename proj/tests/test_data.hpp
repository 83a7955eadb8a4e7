#pragma once

#include <string>

#include "voicerelay/phonetics.hpp"
#include "voicerelay/repair.hpp"

namespace voicerelay::testing {

inline std::string data_path(const std::string& name) { return std::string(VOICERELAY_DATA_DIR) + "/" + name; }
inline std::string test_path(const std::string& name) { return std::string(VOICERELAY_TEST_DIR) + "/" + name; }

inline const Lexicon& lexicon() {
    static const Lexicon lex = Lexicon::load(data_path("cmudict.dict"));
    return lex;
}

inline const CorpusIndex& corpus() {
    static const CorpusIndex index = load_corpus_index(data_path("corpus.txt"), lexicon());
    return index;
}

}  // namespace voicerelay::testing
