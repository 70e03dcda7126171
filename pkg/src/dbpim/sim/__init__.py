from .macro import EventTallies, MacroState, dbmu_compute, tree_reduce, csd_adder_tree, slot_sums, run_bit_cycle
from .hooks import SimHook
from .runner import PassTallies, SimOutput, tile_masks, input_bit_planes, run_layer
