max_tokens_per_passage = 256

passage_sample_size = 50000

default_seed = 1720697007

# Negative entity types queried per example
negatives_per_example = 2

max_queries_per_dataset = 200000

metric_decimals = 4

# Construction prompts, the only instruction text ever sent to the annotation model
construction_system_message = "You are a helpful information extraction system."

type_name_clause = "extract all entities and identify their entity types"

definition_clause = (
    "extract all entities and concepts, and define their type using a short sentence"
)

construction_prompt_template = (
    "Given a passage, your task is to "
    + type_name_clause
    + ". The output should be in a list of tuples of the following format: "
    + '[("entity 1", "type of entity 1"), ... ].\n\n'
    + "Passage: {input_passage}"
)

passage_placeholder = "{input_passage}"

# Conversation template
conversation_system_message = (
    "A virtual assistant answers questions from a user based on the provided text."
)

text_prefix = "Text: "

dataset_prefix = "Dataset: "

dataset_separator = " \n "

read_acknowledgement = "I've read this text."

type_query_prefix = "What describes "

type_query_suffix = " in the text?"

all_in_one_query_prefix = (
    "Which entities of the following types appear in the text? "
    + "Answer with a JSON object mapping each type to a JSON list of mentions. Types: "
)

api_key_environment_variable = "OPENAI_API_KEY"

mock_endpoint_prefix = "mock:"
