"""Writes a tiny random BertModel in safetensors form plus its pooled outputs
for a few id sequences. Used by the encoder loader test."""
import json
import sys

import torch
from safetensors.torch import save_file
from transformers import BertConfig, BertModel

out_dir = sys.argv[1] if len(sys.argv) > 1 else "tests/data"
torch.manual_seed(0)
cfg = BertConfig(vocab_size=30, hidden_size=16, num_hidden_layers=2, num_attention_heads=4,
                 intermediate_size=24, max_position_embeddings=32, type_vocab_size=2,
                 hidden_act="gelu", layer_norm_eps=1e-12, initializer_range=0.2)
model = BertModel(cfg).eval()
with torch.no_grad():
    for name, p in model.named_parameters():
        if "LayerNorm" in name or name.endswith("bias"):
            p.add_(0.1 * torch.randn_like(p))
state = {k: v.contiguous() for k, v in model.state_dict().items() if "position_ids" not in k}
save_file(state, f"{out_dir}/tiny_bert.safetensors")

sequences = [[2, 3], [2, 7, 11, 13, 3], [2] + list(range(5, 29)) + [3]]
expected = []
with torch.no_grad():
    for ids in sequences:
        pooled = model(torch.tensor([ids])).pooler_output[0]
        expected.append({"ids": ids, "pooled": pooled.double().tolist()})
with open(f"{out_dir}/tiny_bert_expected.json", "w") as f:
    json.dump({"config": {"vocab_size": 30, "hidden_size": 16, "num_layers": 2, "num_heads": 4,
                          "intermediate_size": 24, "max_positions": 32}, "cases": expected}, f, indent=1)
