#include "ragloop/trace.hpp"

namespace ragloop::trace {

// Default prompt texts. The shipped files under prompts/ carry the same
// content; TemplateSet::load_dir overrides these per file.

namespace {

const std::string kBaseAgent =
    "Answer the given question.\n"
    "You must conduct reasoning inside <think> and </think> first every time you get new "
    "information.\n"
    "After reasoning, if you find you lack some knowledge, you can call a search engine by "
    "<search> query </search> and it will return the top searched results between "
    "<information> and </information>.\n"
    "You can search as many times as your want only if you don't know the answer yet.\n"
    "If you find no further external knowledge needed, you can directly provide the answer "
    "inside <answer> and </answer>, without detailed illustrations. For example, "
    "<answer> xxx </answer>. Question: {question}";

const std::string kExtractor =
    "Task Instruction: Your objective is to only extract relevant and helpful information "
    "needed in the reasoning process to answer the Question from the Retrieved Information. "
    "Identify factual information that is relevant to the Question and can aid in the "
    "reasoning process for the question.\n"
    "Guidelines:\n"
    "1. Extract Relevant Information:\n"
    "- Select only the relevant information from the <retrieval> and </retrieval> that "
    "directly contributes to answering the question.\n"
    "- Ensure that the extracted information is accurate and relevant.\n"
    "- Add this new relevant information to the Previous Information inside <information> "
    "and </information>.\n"
    "- You must not remove any information, only new information can be added.\n"
    "2. Output Format:\n"
    "- If there is helpful information to answer the Question: Present the information "
    "beginning with <information> and ending with </information> as shown below.\n"
    "<information> Helpful information </information>\n"
    "- If there is no new helpful information to answer the Question: If there is Previous "
    "Information output the previous information otherwise output the following text. "
    "<information> No helpful information found </information>.\n"
    "Inputs:\n"
    "- Question: {question}\n"
    "- Retrieved Information: {information}\n"
    "- Previous Information: {prev_cache}\n"
    "\n"
    "Now you should analyze all documents in the information and find helpful information "
    "based on the Question \"{question}\".";

const std::string kJudgeMatch =
    "You are an expert evaluator to judge if the model's predicted answer correctly matches "
    "any of the ground truth answer. Carefully consider the meaning and correctness. Minor "
    "variations in wording are acceptable if the predicted answer conveys the same "
    "information as the ground truth.\n"
    "\n"
    "Given:\n"
    "The predicted answer.\n"
    "The ground truth answer.\n"
    "\n"
    "Task:\n"
    "Score 0 or 1 based on the semantic similarity of predicted and ground truth answer.\n"
    "\n"
    "Notes:\n"
    "Evaluate only semantic similarity, not factual correctness.\n"
    "\n"
    "Scoring:\n"
    "0 - The predicted answer is not equivalent to ground truth, incomplete in a meaningful "
    "way, or diverges in meaning from the ground truth.\n"
    "1 - The predicted answer is semantically similar or conveys the same meaning as ground "
    "truth\n"
    "\n"
    "Output:\n"
    "Score: X\n"
    "Justification: [Concise 1-2 sentence justification]\n"
    "\n"
    "Input:\n"
    "Predicted Answer: {predicted}\n"
    "Ground Truth Answers: {golds}";

const std::string kReasoningScore =
    "You are an expert evaluator rating how well a model's reasoning extracts and uses "
    "relevant information from given search results to answer the original question.\n"
    "\n"
    "Given:\n"
    "The original question\n"
    "The retrieved search information\n"
    "The model's reasoning after retrieval\n"
    "\n"
    "Task:\n"
    "Score 1-5 how well the reasoning reflects extraction and use of the most relevant info "
    "to answer the question.\n"
    "\n"
    "Notes:\n"
    "Evaluate only relevance and usage of retrieved info, not factual correctness.\n"
    "Reasoning may include prior retrieval info if clearly relevant.\n"
    "Ignore irrelevant details, even if from the retrieved data.\n"
    "\n"
    "Scoring:\n"
    "5 - Uses all key relevant info accurately.\n"
    "4 - Uses most relevant info; minor omissions.\n"
    "3 - Uses some relevant info; misses significant details or has minor irrelevant parts.\n"
    "2 - Uses little relevant info; many important details missing.\n"
    "1 - Fails to use relevant info or includes mostly irrelevant/misleading content.\n"
    "\n"
    "Output:\n"
    "Score: X\n"
    "Justification: [Concise 1-2 sentence justification]\n"
    "\n"
    "Evalute the following input to provide a score and justification:\n"
    "Question: {question}\n"
    "Information: {information}\n"
    "Reasoning: {think}";

}  // namespace

const std::string& default_template_text(TemplateId id) {
    switch (id) {
        case TemplateId::BaseAgent: return kBaseAgent;
        case TemplateId::Extractor: return kExtractor;
        case TemplateId::JudgeMatch: return kJudgeMatch;
        case TemplateId::ReasoningScore: return kReasoningScore;
    }
    return kBaseAgent;
}

}  // namespace ragloop::trace
