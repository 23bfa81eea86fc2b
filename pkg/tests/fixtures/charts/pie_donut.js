// Donut of share per category; scales exist to satisfy the tracking contract.
const radius = Math.min(vw, vh) / 2 - 10;
const g = svg.append("g").attr("transform", `translate(${vw / 2},${vh / 2})`);

const totals = d3.rollups(data, v => d3.sum(v, d => d.value), d => d.category);
const pie = d3.pie().value(d => d[1]);
const arc = d3.arc().innerRadius(radius * 0.55).outerRadius(radius);
const color = d3.scaleOrdinal().domain(totals.map(d => d[0]))
  .range(["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2"]);

g.selectAll("path")
  .data(pie(totals))
  .enter()
  .append("path")
  .attr("d", arc)
  .attr("fill", d => color(d.data[0]))
  .attr("stroke", "white");

g.selectAll("text")
  .data(pie(totals))
  .enter()
  .append("text")
  .attr("transform", d => `translate(${arc.centroid(d)})`)
  .attr("text-anchor", "middle")
  .text(d => d.data[0]);

// identity pixel scales keep gesture coordinates meaningful on radial charts
const xScale = d3.scaleLinear().domain([0, vw]).range([0, vw]);
const yScale = d3.scaleLinear().domain([0, vh]).range([0, vh]);
return [xScale, yScale];
