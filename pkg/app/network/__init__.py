"""Network model: terminals, devices, nets and per-net averaging."""
