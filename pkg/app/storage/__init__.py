"""
Persistencia en ficheros: flujos PTAG, tablas CSV, resultados JSON,
manifiestos de ejecución y ficheros de configuración.
"""
