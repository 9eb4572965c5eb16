"""Deep neuroevolution of small CNNs on functional-connectivity matrices."""

from ._dnefc import (
    Label,
    SynthConfig,
    TrainConfig,
    OcclusionConfig,
    AdjacencyMatrix,
    NetworkSpec,
    GenerationStats,
    default_spec,
    compact_spec,
    glorot_init,
    forward,
    predict,
    conv2d,
    pearson_corr,
    fisher_z,
    scale_and_threshold,
    generate_dataset,
    load_dataset,
    write_dataset,
    evaluate_fitness,
    train,
    occlusion_saliency,
    load_checkpoint,
)

__all__ = [name for name in dir() if not name.startswith("_")]
