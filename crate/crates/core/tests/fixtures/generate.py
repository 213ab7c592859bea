"""Regenerate the integral fixtures in this directory.

Requires PySCF (tested with 2.14.0). Each molecule is run at RHF/STO-3G and the
canonical MO integrals are written as FCIDUMP (Molpro convention) together with
per-axis dipole sidecars (`.dx`, `.dy`, `.dz`, electronic dipole -r in the MO
basis, origin at 0). `reference.json` records RHF and FCI energies for tests.
"""
import json
import numpy as np
from pyscf import gto, scf, fci, mcscf
from pyscf.tools import fcidump

CAS = {"lih": (2, 2), "beh2": (4, 4)}

MOLECULES = {
    "h2": "H 0 0 0; H 0 0 0.7414",
    "lih": "Li 0 0 0; H 0 0 1.5949",
    "h4": "H 0 0 0; H 0 0 1.0; H 0 0 2.0; H 0 0 3.0",
    "beh2": "Be 0 0 0; H 0 0 1.3264; H 0 0 -1.3264",
}


def write_dipole(path, mat):
    n = mat.shape[0]
    with open(path, "w") as f:
        for i in range(n):
            for j in range(i + 1):
                if abs(mat[i, j]) > 1e-14:
                    f.write(f"{mat[i, j]: .16e} {i + 1:4d} {j + 1:4d}    0    0\n")


reference = {}
for name, atom in MOLECULES.items():
    mol = gto.M(atom=atom, basis="sto-3g", unit="Angstrom", symmetry=False)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    fcidump.from_scf(mf, f"{name}.fcidump", tol=1e-14)
    r = mol.intor("int1e_r")
    for axis, comp in zip("xyz", r):
        write_dipole(f"{name}.fcidump.d{axis}", -mf.mo_coeff.T @ comp @ mf.mo_coeff)
    cis = fci.FCI(mf)
    cis.nroots = 8
    e, _ = cis.kernel()
    reference[name] = {
        "geometry_angstrom": atom,
        "basis": "sto-3g",
        "norb": int(mf.mo_coeff.shape[1]),
        "nelec": int(mol.nelectron),
        "e_rhf": float(mf.e_tot),
        "e_fci_lowest_roots": [float(x) for x in np.atleast_1d(e)],
    }
    if name in CAS:
        norb_cas, nelec_cas = CAS[name][1], CAS[name][0]
        mc = mcscf.CASSCF(mf, norb_cas, nelec_cas)
        mc.conv_tol = 1e-12
        mc.kernel()
        reference[name][f"e_casscf_{nelec_cas}_{norb_cas}"] = float(mc.e_tot)

with open("reference.json", "w") as f:
    json.dump(reference, f, indent=2)
