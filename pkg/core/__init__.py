# core package: linear algebra, data model, SDP bridge and fragility engines
