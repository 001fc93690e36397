"""Motion planning through door and switch gadget networks."""
