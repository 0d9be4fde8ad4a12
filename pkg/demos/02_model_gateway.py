"""Model gateway: prompt templates, scripted mocks, token-hash embeddings.

Run from the repository root:  python3 demos/02_model_gateway.py
"""

from wikiforge.gateway import (
    ChatRequest,
    MockChatBackend,
    MockEmbedBackend,
    ModelGateway,
    cosine,
    default_routing,
    mock_script_key,
)

# Every chat call names a template; the prompt is rendered from an asset file
# whose placeholder set is checked against the documented variable table.
gateway = ModelGateway(MockChatBackend(), MockEmbedBackend(dimension=64))
prompt = gateway.templates["entailer"]
print("--- entailer template ---")
print(prompt)

# Scripted mock: exact responses keyed by (template, variables hash).
variables = {"topic": "Tea", "text": "Tea is old. Tea is hot."}
script = {mock_script_key("extract", variables): '["Tea is ancient."]'}
scripted = ModelGateway(MockChatBackend(script=script), MockEmbedBackend(dimension=64))
print("scripted extract ->", scripted.chat(ChatRequest("extract", variables)))

# Unscripted requests fall back to deterministic per-template defaults, e.g.
# the extract default returns on-topic sentences as a JSON list.
print("default extract  ->", gateway.chat(ChatRequest("extract", variables)))

# Mock embeddings hash tokens into fixed vectors: equal texts embed equally,
# and token overlap raises cosine similarity.
apple, pie, qcd = gateway.embed(["red apple", "red apple pie", "quantum chromodynamics"])
print(f"cos(apple, apple pie) = {cosine(apple, pie):.3f}")
print(f"cos(apple, qcd)       = {cosine(apple, qcd):.3f}")

# Per-template model routing: planning/prose templates go to a stronger
# model, everything else to a cheaper one (override per template in config).
routing = default_routing("big-model", "small-model")
print("section_writer ->", routing["section_writer"], "| entailer ->", routing["entailer"])
