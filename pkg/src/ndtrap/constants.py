"""Physical constants, SI throughout."""

ELEMENTARY_CHARGE = 1.602176634e-19   # C
BOLTZMANN = 1.380649e-23              # J/K
AVOGADRO = 6.02214076e23              # 1/mol
PLANCK = 6.62607015e-34               # J s
SPEED_OF_LIGHT = 299792458.0          # m/s

DIAMOND_DENSITY = 3.52e3              # kg/m^3
CARBON_ATOM_VOLUME = 5.67e-30         # m^3 per atom in diamond

AIR_MOLAR_MASS = 28.9647e-3           # kg/mol
AIR_MOLECULE_MASS = AIR_MOLAR_MASS / AVOGADRO  # kg

ROOM_TEMPERATURE = 295.0              # K

TORR = 101325.0 / 760.0               # Pa

# h*c/e in eV nm, for wavelength <-> photon energy
EV_NM = PLANCK * SPEED_OF_LIGHT / ELEMENTARY_CHARGE * 1e9
