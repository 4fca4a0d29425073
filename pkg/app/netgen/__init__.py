"""Random benchmark generation: topology, device mix, parameters and line calibration."""
from app.netgen.attach import attach_devices, device_counts, sample_params
from app.netgen.calibration import calibrate_lines
from app.netgen.gen_config import GenConfig
from app.netgen.instance import Instance, generate_instance
from app.netgen.perturb import apply_load_factors, draw_load_factors, perturb_loads
from app.netgen.topology import average_degree, gen_topology
