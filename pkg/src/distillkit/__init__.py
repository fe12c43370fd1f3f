"""distillkit: desk-scale distillation and compression of BERT-style encoders.

Sub-packages:
    numerics   reverse-mode differentiable tensors over numpy
    tokenizer  WordPiece vocabulary induction and encoding
    corpus     corpora loaders, synthetic corpora, MLM masking
    encoder    standard and bottleneck transformer encoders
    distill    distillation losses, layer maps, student initialisation
    train      optimisation loops (distillation, MLM, fine-tuning)
    eval       NER / RE / QA metrics
    bench      inference latency and memory comparison
    cli        command-line entry point
"""

__version__ = "0.1.0"
