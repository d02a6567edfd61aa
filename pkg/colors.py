white = (0xFF, 0xFF, 0xFF)
black = (0x0, 0x0, 0x0)
red = (0xD6, 0x27, 0x28)
blue = (0x1F, 0x77, 0xB4)
orange = (0xFF, 0x7F, 0x0E)
green = (0x2C, 0xA0, 0x2C)
purple = (0x94, 0x67, 0xBD)
brown = (0x8C, 0x56, 0x4B)
pink = (0xE3, 0x77, 0xC2)
gray = (0x7F, 0x7F, 0x7F)
olive = (0xBC, 0xBD, 0x22)
cyan = (0x17, 0xBE, 0xCF)

# Trace colors by column family.
state = (blue, orange, green, red)
estimate = (purple, brown, pink, olive)
innovation = cyan
control = red
disturbance = gray
noise = gray

grid = (0xDD, 0xDD, 0xDD)
sample_marker = (0xA0, 0xA0, 0xA0)

def hex_color(rgb) -> str:
    """Return a '#rrggbb' string for an (r, g, b) tuple."""
    return "#{:02x}{:02x}{:02x}".format(*rgb)

def column_color(column: str):
    """Pick a trace color for a SimulationLog column name."""
    if column == "u":
        return control
    if column == "w":
        return innovation
    if column == "xi":
        return noise
    for prefix, family in (("x", state), ("z", estimate)):
        if column.startswith(prefix) and column[len(prefix):].isdigit():
            return family[(int(column[len(prefix):]) - 1) % len(family)]
    if column.startswith("d"):
        return disturbance
    return black
